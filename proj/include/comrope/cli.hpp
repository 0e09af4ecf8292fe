#pragma once

#include <iosfwd>

namespace comrope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSuiteFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the comrope command line. Results go to --out or `out`; diagnostics
/// and the resolved seed go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace comrope::cli
