#pragma once

#include <ostream>

namespace netsurv::cli {

/// Runs the command line; returns 0 on success, 2 on validation errors and 3
/// on computation errors. Errors are written to `err` as a single line
/// `error[<code>]: <message>`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace netsurv::cli
