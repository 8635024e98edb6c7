#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace attiqa::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Runs one subcommand. Returns 0 on success, 1 on validation or usage
/// errors and 2 on runtime failures. argv[0] is the program name.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace attiqa::cli
