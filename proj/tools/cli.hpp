#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace litsearch::cli {

// Runs one invocation (args excludes the program name). Errors become a
// single "error: <Code>: <message>" line on `err` and a nonzero return.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace litsearch::cli
