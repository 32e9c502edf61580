#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ldl::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kViolation = 4 };

/// Default feature width of generated synthetic datasets.
inline constexpr long kDefaultFeatDim = 50;

/// Runs one `ldl` invocation; args[0] is the program name. Never throws:
/// errors are reported on `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldl::cli
