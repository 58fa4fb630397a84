#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hetsim::cli {

enum ExitCode : int {
    ok = 0,
    usage = 1,
    validation = 2,
    capacity = 3,
    numerical = 4,
};

// Runs the hetsim command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hetsim::cli
