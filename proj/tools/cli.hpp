#pragma once

namespace sae::cli {

/// Exit codes: 0 ok, 1 runtime failure (including partial prediction
/// failures), 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv);

}  // namespace sae::cli
