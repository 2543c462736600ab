#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfair {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnsatisfied = 2;

/// Runs the command line `args` (without the program name). Reports go to `out` unless
/// --out is given; error messages go to `err`. Log verbosity comes from CFAIR_LOG_LEVEL.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfair
