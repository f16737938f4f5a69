#pragma once

// Command-line front end. Exit codes: 0 success, 1 configuration or usage
// error, 2 numerical failure (outputs that could be produced are written).

#include <iosfwd>
#include <string>
#include <vector>

namespace drekf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// `args` excludes the program name. Data go to `out`, progress and
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drekf
