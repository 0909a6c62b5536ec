#pragma once

#include <iosfwd>

namespace daema::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;  // bug, not part of the contract
inline constexpr int kExitUser = 2;
inline constexpr int kExitNumeric = 3;

// Verbs: corrupt, train, impute, experiment, evaluate.
// Normal output goes to `out`, diagnostics and progress to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace daema::cli
