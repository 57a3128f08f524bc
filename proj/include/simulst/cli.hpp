#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simulst::cli {

inline constexpr const char* kVersion = "0.3.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalidInput = 1;  // validation failures, malformed files
inline constexpr int kUsageError = 2;    // bad flags, out-of-domain values

/// Entry point shared by the executable and the tests. `args` is argv,
/// program name first. Normal output goes to
/// `out`; errors are written to `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simulst::cli
