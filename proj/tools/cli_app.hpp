#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace heraldkit::cli {

/// Parse and execute one command-line invocation. Returns the process exit
/// code: 0 on success, 2 for usage or parameter validation errors, 3 for
/// runtime failures (I/O, precision). Messages go to the given streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace heraldkit::cli
