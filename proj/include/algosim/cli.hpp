#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace algosim {

/// Exit codes: 0 success, 1 fork / violation / difference found, 2 usage,
/// parse or config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the algosim tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace algosim
