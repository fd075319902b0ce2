#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repdis {

inline constexpr const char* kVersion = "0.1.0";

/// Runs the `repdis` command line in-process. `args` excludes the program
/// name. Errors are reported on `err` as a single line
/// "<Category>: <detail>" and mapped to the category's exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repdis
