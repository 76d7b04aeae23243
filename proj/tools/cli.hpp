#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memcap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Runs one `memcap` command. `args` excludes the program name. Results go to
// `out`, diagnostics to `err`; progress logging goes to standard error at the
// level named by MEMCAP_LOG (off, error, warn, info, debug; default info).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memcap::cli
