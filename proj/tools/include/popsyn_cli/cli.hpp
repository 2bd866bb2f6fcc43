#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace popsyn::cli {

/// Runs the command line `args` (args[0] is the program name). Returns 0 on
/// success, 1 on a domain error and 2 on a usage error.
int run(std::span<const std::string> args, std::ostream &out, std::ostream &err);

} // namespace popsyn::cli
