#pragma once

// Scan planning and execution over the dataset manifest.
//
// Raw outputs are cached at
//   <cache>/<tool>/<version>/<digest>/<mode>.raw
// next to a <mode>.meta JSON and a <mode>.log of the tool's stderr, where
// <mode> is "image", "native-sbom", "<source>-sbom" or, for SBOM production
// jobs, "sbom". Every finished job is appended to <cache>/ledger.jsonl.

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vexmatch/model.hpp"
#include "vexmatch/process.hpp"
#include "vexmatch/tool_config.hpp"

namespace vexmatch {

enum class JobStatus { kPending, kRunning, kDone, kFailed, kSkippedCached };
enum class JobKind { kProduceSbom, kScan };

std::string_view to_string(JobStatus s);
std::string_view to_string(JobKind k);

struct ScanJob {
  JobKind kind = JobKind::kScan;
  std::string tool_config_id;  // for SBOM jobs: "<producer>:sbom"
  std::string tool_name;
  std::string image_ref;
  std::string mode_key;
  std::string command_template;
  std::optional<std::size_t> depends_on;  // plan index of the SBOM job
  std::string sbom_path;
  std::string output_path;
  JobStatus status = JobStatus::kPending;
  std::string started_at;
  std::string finished_at;
  std::string tool_version;
  std::string reported_version;
  std::optional<int> exit_code;
  std::string message;
};

/// One scan job per (configuration, image) plus one SBOM production job per
/// (producer, image) that SBOM-mode configurations share. Production jobs
/// come first, so every dependency precedes its dependents. Throws
/// ConfigError when a configuration fails the catalog's capability or
/// SBOM-format checks, and ValidationError for an empty manifest.
std::vector<ScanJob> plan_jobs(const ToolCatalog &catalog, const std::vector<ToolConfig> &configs,
                               const DatasetManifest &manifest);

struct RunOptions {
  std::string cache_dir = "cache";
  std::chrono::milliseconds timeout = ToolCatalog::kDefaultTimeout;
  unsigned workers = ToolCatalog::kDefaultWorkers;
  bool force = false;
};

class Orchestrator {
 public:
  Orchestrator(const ToolCatalog &catalog, ProcessRunner &runner, RunOptions options);

  /// Runs one job whose dependency (if any) has already finished and whose
  /// sbom_path is filled in. Never throws on tool failure; the outcome is in
  /// the returned job's status and message.
  ScanJob run_job(ScanJob job);

  /// Runs a whole plan, independent jobs in parallel, appending each finished
  /// job to the ledger. Jobs whose dependency failed are marked FAILED.
  std::vector<ScanJob> run_plan(std::vector<ScanJob> plan);

  /// Tool version used in the cache key: pinned, or first output line of the
  /// version command (probed once per tool and memoized).
  std::optional<std::string> tool_version(const std::string &tool, std::string *error = nullptr);

  std::string output_path_for(const ScanJob &job, const std::string &version) const;
  std::string ledger_path() const;

  /// Called after each finished job (under the ledger lock).
  void on_finished(std::function<void(const ScanJob &)> callback) { on_finished_ = std::move(callback); }

 private:
  void append_ledger(const ScanJob &job);

  const ToolCatalog &catalog_;
  ProcessRunner &runner_;
  RunOptions options_;
  std::mutex version_mutex_;
  std::map<std::string, std::optional<std::string>> versions_;
  std::map<std::string, std::string> version_errors_;
  std::map<std::string, std::string> reported_versions_;
  std::mutex ledger_mutex_;
  std::function<void(const ScanJob &)> on_finished_;
};

std::string job_to_json(const ScanJob &job);

}  // namespace vexmatch
