#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scvad::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitRuntime = 4,
};

// Runs one `scvad <command> ...` invocation. `args` excludes the program
// name. Errors go to `err` as a single line:
//   scvad: error: kind=<usage|data|runtime|internal> message="..."
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scvad::cli
