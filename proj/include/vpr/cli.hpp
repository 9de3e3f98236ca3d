#pragma once

#include <iosfwd>
#include <stop_token>
#include <string>
#include <vector>

namespace vpr {

// Entry point of the vpr-rerank tool. `args` excludes the program name. Returns the
// process exit code: 0 on success, 2 on usage errors, 1 on any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::stop_token stop = {});

}  // namespace vpr
