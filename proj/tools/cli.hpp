#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l2c::cli {

inline constexpr int kUsageError = 64;

/// Runs one CLI invocation; args excludes the program name.
/// Returns the process exit status.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace l2c::cli
