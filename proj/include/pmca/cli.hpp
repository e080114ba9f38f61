#pragma once

#include <ostream>

namespace pmca {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitValidation = 3,
    kExitChain = 4,
    kExitThreshold = 5,
    kExitCbiRegime = 6,
};

/// Runs the `pmca` command line (check, simulate, premission, monitor) and returns its exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmca
