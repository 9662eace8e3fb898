#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace treetensor::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kVerification = 2,
    kRuntime = 3,
};

/// Runs the `treetensor` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treetensor::cli
