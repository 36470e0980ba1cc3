#pragma once

#include <iosfwd>

namespace mbhc {

/// Entry point of the `mbhc` tool. Returns 0 on success, 1 for bad input
/// (arguments, files, configuration) and 2 when an internal invariant breaks.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mbhc
