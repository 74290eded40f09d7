#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace r3svd::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,         // bad arguments, unreadable input, I/O failure
  kNotConverged = 2,  // results written, threshold not reached
  kDiverged = 3,      // matrix completion diverged
};

/// Runs `r3svd <args...>` (args exclude the program name) and returns the exit code.
/// Human-readable progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace r3svd::cli
