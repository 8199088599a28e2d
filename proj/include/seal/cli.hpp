#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seal::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kPipelineFailure = 2, kSuspended = 3 };

struct Console {
  std::istream &in;
  std::ostream &out;
  std::ostream &err;
  bool tty = false; ///< whether `in` is an interactive terminal
};

/// Runs one `seal` command. `args` excludes the program name.
int run_command(const std::vector<std::string> &args, Console &console);

} // namespace seal::cli
