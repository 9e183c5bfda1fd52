#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdcv {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 1,
    kExitFindings = 2, // --strict and at least one Error finding
    kExitFailure = 3,  // checker failure, counterexample or corpus mismatch
    kExitBudget = 4,
    kExitMismatch = 5, // coverage fingerprint or replay mismatch
};

/// Run one `cdcv` invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cdcv
