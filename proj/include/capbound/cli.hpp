#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace capbound {

inline constexpr const char* kReportSchemaVersion = "1.0.0";

/// Parses `args` (without the program name), runs the subcommand and returns
/// the exit code: 0 success, 2 precondition or configuration error, 1 internal
/// error or a failed lemma check.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace capbound
