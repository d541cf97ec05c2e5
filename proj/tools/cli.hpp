#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rankderiv::cli {

// Exit statuses.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failed = 1;  // verification found violations
inline constexpr int exit_usage = 2;   // usage, parse or precondition error

// Runs one command line (args excludes the program name). Reports go to out,
// one-line diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rankderiv::cli
