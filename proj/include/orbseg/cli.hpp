#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace orbseg {

// Runs the command-line front end. `args` excludes the program name. Returns
// the process exit code: 0 on success, 1 when a command fails, 2 on a usage
// error. Failures print a single `error: <message>` line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Environment variable supplying the default for --threads.
inline constexpr const char* kThreadsEnv = "ORBSEG_THREADS";

}  // namespace orbseg
