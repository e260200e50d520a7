#pragma once

#include <string>
#include <vector>

namespace extractkit::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBudgetError = 3,
  kTransportError = 4,
};

int execute(int argc, char** argv);
// argv[0] is the program name.
int execute(const std::vector<std::string>& args);

}  // namespace extractkit::cli
