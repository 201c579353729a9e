#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace partition_tree::cli {

enum ExitCode { kSuccess = 0, kDataError = 1, kUsageError = 2 };

// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace partition_tree::cli
