#pragma once

#include <string>
#include <vector>

namespace cogen {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalid = 2,
  kExitNumerical = 3,
  kExitOracleMismatch = 4,
};

/// Entry point of the `cogen` tool. Subcommands: precompute, optimize,
/// gamma-sweep, unsweep, sweep, metrics, oracle-check, export.
int run_command(int argc, char** argv);
/// Same, with args[0] taken as the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace cogen
