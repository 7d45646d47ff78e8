#pragma once

#include <ostream>

namespace webrefine {

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskErrors = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `webrefine` tool, parameterised on its output streams so
/// tests can drive it in-process. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace webrefine
