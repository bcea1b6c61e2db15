#include "vexmatch/process.hpp"

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "vexmatch/error.hpp"

namespace vexmatch {

namespace {

void append_capped(std::string &buf, const char *data, std::size_t n) {
  const auto room = ShellProcessRunner::kCaptureLimit > buf.size() ? ShellProcessRunner::kCaptureLimit - buf.size() : 0;
  buf.append(data, std::min(room, n));
}

bool is_shell_builtin(const std::string &program) {
  static const char *kBuiltins[] = {"echo", "printf", "exit", "true", "false", "test", "[", "cd", "exec", ":", "."};
  for (const char *b : kBuiltins) {
    if (program == b) return true;
  }
  return false;
}

}  // namespace

std::string shell_quote(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string render_command(std::string_view tmpl, const std::map<std::string, std::string> &values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw ConfigError("unterminated placeholder in '" + std::string(tmpl) + "'");
    const std::string name(tmpl.substr(i + 1, close - i - 1));
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown placeholder {" + name + "} in '" + std::string(tmpl) + "'");
    out += shell_quote(it->second);
    i = close;
  }
  return out;
}

std::string command_program(std::string_view command) {
  const auto first = command.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto end = command.find_first_of(" \t;|&<>", first);
  return std::string(command.substr(first, end == std::string_view::npos ? end : end - first));
}

bool program_available(const std::string &program) {
  if (program.empty()) return false;
  if (is_shell_builtin(program)) return true;
  if (program.find('/') != std::string::npos) return ::access(program.c_str(), X_OK) == 0;
  const char *path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::string_view dirs(path);
  while (!dirs.empty()) {
    const auto colon = dirs.find(':');
    const auto dir = dirs.substr(0, colon);
    const auto candidate = (dir.empty() ? std::string(".") : std::string(dir)) + "/" + program;
    if (::access(candidate.c_str(), X_OK) == 0 && !std::filesystem::is_directory(candidate)) return true;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return false;
}

ProcessResult ShellProcessRunner::run(const std::string &command, std::chrono::milliseconds timeout) {
  ProcessResult result;
  if (!program_available(command_program(command))) {
    result.not_found = true;
    result.exit_code = 127;
    result.stderr_text = "program not found: " + command_program(command);
    return result;
  }

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw Error(std::string("pipe: ") + std::strerror(errno));
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    throw Error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[8192];
  while (open_fds > 0) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      break;
    }
    const int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (auto &p : fds) {
      if (p.fd < 0 || (p.revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      const ssize_t n = ::read(p.fd, buf, sizeof buf);
      if (n > 0) {
        append_capped(p.fd == out_pipe[0] ? result.stdout_text : result.stderr_text, buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
        ::close(p.fd);
        p.fd = -1;
        --open_fds;
      }
    }
  }
  if (result.timed_out) ::kill(-pid, SIGKILL);
  for (auto &p : fds) {
    if (p.fd >= 0) ::close(p.fd);
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  if (!result.timed_out && result.exit_code == 127) result.not_found = true;
  return result;
}

}  // namespace vexmatch
