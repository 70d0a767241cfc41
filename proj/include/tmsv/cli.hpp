#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmsv::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input_error = 2;
inline constexpr int exit_numeric_failure = 3;

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tmsv::cli
