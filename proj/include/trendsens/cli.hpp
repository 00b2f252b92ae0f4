#pragma once

#include <ostream>

namespace trendsens {

/// Entry point of the `trendsens` tool.  Returns the process exit code:
/// 0 success, 2 configuration error, 3 data error, 4 numerical error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trendsens
