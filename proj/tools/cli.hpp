#pragma once

#include <string>
#include <vector>

namespace dgx {

/// Runs one CLI invocation; args exclude the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace dgx
