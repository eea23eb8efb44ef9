#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rate::cli {

// Runs one command line (without the program name). Results go to `out`
// unless --output names a file; diagnostics go to `err`. Returns the exit
// code: 0 success, 2 schema or argument error, 3 positivity failure, 1 other.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rate::cli
