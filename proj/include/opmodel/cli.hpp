#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opmodel {

/// Exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerdictFalse = 1,  ///< boolean query answered false under --strict
  kExitInputError = 2,
  kExitToleranceBreach = 3,
};

/// Runs one command. `args` excludes the program name. Reports go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opmodel
