#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbmatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;

/// Runs one command line (without the program name). Returns the process
/// exit status: 0 on success, 2 on any configuration or usage error.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbmatch::cli
