#pragma once

#include <ostream>

namespace vmreg {

/// Runs the library's invariant suite, printing one PASS/FAIL line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream& out);

}  // namespace vmreg
