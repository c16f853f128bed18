#ifndef SPARSEBNB_TOOLS_CLI_HPP_
#define SPARSEBNB_TOOLS_CLI_HPP_

#include <iosfwd>
#include <stop_token>
#include <string>
#include <vector>

namespace sparsebnb::cli {

enum ExitCode : int { kOk = 0, kError = 1, kLimit = 2 };

/// Entry point of the `sparsebnb` tool. args[0] is the program name.
/// Every option can also be set through an environment variable SPARSEBNB_<NAME>,
/// e.g. SPARSEBNB_LAMBDA0 or SPARSEBNB_GAP_TOL; flags on the command line take precedence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::stop_token stop = {});

}  // namespace sparsebnb::cli

#endif  // SPARSEBNB_TOOLS_CLI_HPP_
