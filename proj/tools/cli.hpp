#pragma once

#include <iosfwd>

namespace cpirt {

/// Runs the command-line interface. Returns 0 on success, 1 on a usage error
/// and 2 on a data or convergence error. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpirt
