#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace culturesim {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the `culturesim` tool (subcommands run, analyze, serve). `args[0]` is the
/// program name. Returns kExitUsage for bad flags or an invalid configuration, kExitFailure
/// when a seed fails or results cannot be read.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace culturesim
