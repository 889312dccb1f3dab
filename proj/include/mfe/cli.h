#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace mfe {

/// Parses "12.5", "12pi", "12*pi", "pi" or "-2pi".
double parse_pi_number(const std::string& text);

/// Runs the `mfe` command line. Exit codes: 0 success, 2 configuration error or bad usage,
/// 3 numerical non-convergence (partial outputs kept), 1 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfe
