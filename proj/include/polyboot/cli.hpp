#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polyboot {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitData = 2,
    kExitSolver = 3,
    kExitConfig = 4,
};

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// (or the --output file), messages and progress to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polyboot
