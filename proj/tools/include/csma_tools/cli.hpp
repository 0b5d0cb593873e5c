#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csma::tools {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // unexpected error
  kExitParameter = 2,     // bad flag, config key or value
  kExitIo = 3,
  kExitFormat = 4,
  kExitShape = 5,
  kExitDivergence = 6,    // training diverged or produced non-finite values
  kExitConsistency = 7,
  kExitValidation = 8,
  kExitInsufficient = 9,
  kExitGradcheck = 10,    // gradient check above tolerance
};

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csma::tools
