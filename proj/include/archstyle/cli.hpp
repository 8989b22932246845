#pragma once

#include <string>
#include <vector>

namespace archstyle {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `archstyle` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime failure, 2 on usage or validation errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace archstyle
