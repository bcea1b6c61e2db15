#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace vexmatch {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  bool not_found = false;
  std::string stdout_text;
  std::string stderr_text;
};

/// Executes shell command lines. The orchestrator only talks to this
/// interface, so tests can count or script process launches.
class ProcessRunner {
 public:
  virtual ~ProcessRunner() = default;
  virtual ProcessResult run(const std::string &command, std::chrono::milliseconds timeout) = 0;
};

/// Runs commands through /bin/sh -c in their own process group. On timeout
/// the whole group is killed. A command whose program cannot be resolved on
/// PATH is reported as not_found without spawning anything. Captured
/// streams are truncated to a bounded size.
class ShellProcessRunner final : public ProcessRunner {
 public:
  static constexpr std::size_t kCaptureLimit = 1 << 20;

  ProcessResult run(const std::string &command, std::chrono::milliseconds timeout) override;
};

/// POSIX single-quoted form of a value.
std::string shell_quote(std::string_view value);

/// Replaces {name} placeholders with shell-quoted values. Throws ConfigError
/// on an unknown placeholder or an unterminated brace.
std::string render_command(std::string_view command_template, const std::map<std::string, std::string> &values);

/// First word of a command line, or empty.
std::string command_program(std::string_view command);

/// True when the program is a path to an executable file or resolves on PATH.
bool program_available(const std::string &program);

}  // namespace vexmatch
