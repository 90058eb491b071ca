#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fletcher::tools {

enum ExitCode { kConverged = 0, kNotConverged = 1, kUsage = 2 };

/// Runs `fletcher <subcommand> ...`; args exclude the program name.
/// Reports go to `out` unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// CSV header written by `sweep`.
extern const char* const kSweepHeader;

}  // namespace fletcher::tools
