#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geodetect {

/// Runs one subcommand. Results go to `out` (JSON, CSV or the adjacency text
/// format), diagnostics to `err`. Returns 0 on success, 1 on a usage or
/// parameter error, 2 on a numeric failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace geodetect
