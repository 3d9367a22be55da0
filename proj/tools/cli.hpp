#ifndef NEURODAVIS_TOOLS_CLI_HPP
#define NEURODAVIS_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace neurodavis::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3 };

/// Runs one subcommand; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neurodavis::cli

#endif
