#pragma once

#include <string>
#include <vector>

namespace syncmatch::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kNumerical = 3,
  kIO = 4,
};

/// Entry point behind the `syncmatch` executable. `args` excludes argv[0].
int run(const std::vector<std::string>& args);

}  // namespace syncmatch::cli
