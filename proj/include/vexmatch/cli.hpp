#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vexmatch {
class ProcessRunner;
}

namespace vexmatch::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kUsageError = 2,
  kNumericError = 3,
};

/// Runs one invocation. args excludes the program name. A null runner
/// means real processes via /bin/sh.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err,
        ProcessRunner *runner = nullptr);

int run(int argc, char **argv, std::ostream &out, std::ostream &err);

}  // namespace vexmatch::cli
