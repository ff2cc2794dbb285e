#pragma once

#include <iosfwd>

#include "hqnet/error.h"

namespace hqnet {

// Exit codes: 0 success, 1 usage, 2 configuration, 3 I/O, 4 metadata mismatch, 5 analysis failure.
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitMismatch = 4;
inline constexpr int kExitAnalysis = 5;

int exit_code_for(ErrorCode code);

const char* tool_version();

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hqnet
