#include "vmreg/cli.hpp"

int main(int argc, char** argv) { return vmreg::run_cli(argc, argv); }
