#pragma once

#include <string>
#include <vector>

namespace trackpose::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kNonFiniteLoss = 4,
  kSchemaMismatch = 5,
};

/// Parses `trackpose <simulate|train|localize|evaluate> [options]` and runs it.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace trackpose::cli
