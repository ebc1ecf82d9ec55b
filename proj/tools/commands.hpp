#pragma once

// Subcommand front end shared by the executable and the tests.

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperddc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitInput = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyperddc::cli
