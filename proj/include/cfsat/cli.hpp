#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfsat {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitOverConstrained = 3,
    kExitBudget = 4,
    kExitIo = 5,
};

// Entry point of the `cfsat` executable: compile, explain, batch.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cfsat
