#pragma once

namespace vmreg {
int run_cli(int argc, char** argv);
}
