#pragma once

// Shared helpers for the test binaries: fixture paths, scratch directories,
// seeded generators and a scripted process runner.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "vexmatch/cli.hpp"
#include "vexmatch/model.hpp"
#include "vexmatch/process.hpp"

namespace testing {

inline std::string fixture(const std::string &relative) { return std::string(VEXMATCH_FIXTURES) + "/" + relative; }

inline std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::string &path, const std::string &content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vexmatch-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  std::string str() const { return path_.string(); }
  std::string operator/(const std::string &rel) const { return (path_ / rel).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string digest_of(int n) {
  static const char *kHex = "0123456789abcdef";
  std::string hex;
  unsigned x = static_cast<unsigned>(n) * 2654435761u + 12345u;
  for (int i = 0; i < 64; ++i) {
    x = x * 1103515245u + 12345u;
    hex += kHex[(x >> 16) & 15];
  }
  return "sha256:" + hex;
}

inline std::string image(int n) { return "library/img" + std::to_string(n) + "@" + digest_of(n); }

/// Key number k of a small universe; distinct k give distinct keys.
inline vexmatch::MatchKey key(int k) {
  return {image(k % 3), "pkg" + std::to_string(k % 7) + "@1." + std::to_string(k), "CVE-2024-" + std::to_string(1000 + k)};
}

/// Random subset of {0..universe-1}.
inline std::set<int> random_members(std::mt19937 &rng, int universe) {
  std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  std::set<int> out;
  for (int k = 0; k < universe; ++k) {
    if (coin(rng)) out.insert(k);
  }
  return out;
}

inline vexmatch::RecordSet to_set(const std::string &label, const std::set<int> &members) {
  vexmatch::RecordSet s(label);
  for (int k : members) s.insert(key(k));
  return s;
}

/// Counts launches and, like a real scanner, writes a report to whatever
/// temporary output path the rendered command names.
class FakeRunner : public vexmatch::ProcessRunner {
 public:
  vexmatch::ProcessResult run(const std::string &command, std::chrono::milliseconds) override {
    std::lock_guard lock(mutex_);
    ++launches;
    commands.push_back(command);
    vexmatch::ProcessResult r;
    r.exit_code = 0;
    static const std::regex kOut("'([^']*\\.tmp\\.[^']*)'");
    std::smatch m;
    if (std::regex_search(command, m, kOut)) {
      std::ofstream(m[1].str(), std::ios::binary) << report_for(command) << '\n';
    } else {
      r.stdout_text = "fake 1.0.0\n";
    }
    return r;
  }

  int launches = 0;
  std::vector<std::string> commands;

  /// Smallest document the named program would plausibly write.
  static std::string report_for(const std::string &command) {
    const auto starts = [&](const char *prefix) { return command.rfind(prefix, 0) == 0; };
    if (command.find("cyclonedx") != std::string::npos || starts("cdxgen") || starts("vexy")) {
      return R"({"bomFormat": "CycloneDX", "specVersion": "1.5", "components": []})";
    }
    if (command.find("spdx") != std::string::npos) return R"({"spdxVersion": "SPDX-2.3", "packages": []})";
    if (starts("trivy")) return R"({"SchemaVersion": 2, "Results": []})";
    if (starts("osv-scanner")) return R"({"results": []})";
    if (starts("depscan")) return R"({"id": "CVE-2024-0001", "purl": "pkg:npm/left-pad@1.0.0", "fix_version": ""})";
    if (starts("docker scout") || starts("snyk")) return R"({"vulnerabilities": []})";
    return R"({"matches": []})";
  }

 private:
  std::mutex mutex_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult cli(const std::vector<std::string> &args, vexmatch::ProcessRunner *runner = nullptr) {
  std::ostringstream out, err;
  const int code = vexmatch::cli::run(args, out, err, runner);
  return {code, out.str(), err.str()};
}

/// Normalizes the 3 tools x 3 images corpus into dir, one file per report.
/// Returns false if any invocation failed.
inline bool normalize_e2e_corpus(const std::string &dir) {
  std::ifstream images(fixture("e2e/images.txt"));
  std::string letter, ref;
  while (images >> letter >> ref) {
    for (const std::string tool : {"grype", "trivy", "osv"}) {
      const auto r = cli({"--quiet", "normalize", fixture("e2e/raw/" + tool + "/" + letter + ".json"), "--image", ref,
                          "--tool-config", tool, "--out", dir + "/" + tool + "-" + letter + ".jsonl"});
      if (r.code != 0) return false;
    }
  }
  return true;
}

}  // namespace testing
