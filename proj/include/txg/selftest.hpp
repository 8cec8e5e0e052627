#pragma once

#include <ostream>

namespace txg {

/// Runs the cross-module invariant suite and prints a pass/fail table.
/// Returns the number of failed checks (0 = all good).
int run_selftest(std::ostream& out);

} // namespace txg
