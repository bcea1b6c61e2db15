#include "vexmatch/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "vexmatch/error.hpp"

namespace vexmatch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string path_component(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    out += (std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '+' || c == ':') ? static_cast<char>(c) : '_';
  }
  return out.empty() ? "_" : out;
}

std::string first_line(std::string_view text) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return {};
  auto line = text.substr(start, text.find('\n', start) - start);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  return std::string(line);
}

std::string tail(const std::string &s, std::size_t n) { return s.size() <= n ? s : "..." + s.substr(s.size() - n); }

void require_placeholders(const std::string &id, const std::string &tmpl, std::initializer_list<const char *> names) {
  for (const char *name : names) {
    if (tmpl.find(std::string("{") + name + "}") == std::string::npos) {
      throw ConfigError(id + ": command '" + tmpl + "' lacks the {" + name + "} placeholder");
    }
  }
}

bool write_atomically(const fs::path &target, const std::string &content) {
  const auto tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    if (!out) return false;
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  return !ec;
}

fs::path sibling(const std::string &raw_path, const char *extension) {
  fs::path p(raw_path);
  p.replace_extension(extension);
  return p;
}

std::atomic<unsigned long> g_tmp_counter{0};

}  // namespace

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kPending:
      return "PENDING";
    case JobStatus::kRunning:
      return "RUNNING";
    case JobStatus::kDone:
      return "DONE";
    case JobStatus::kFailed:
      return "FAILED";
    case JobStatus::kSkippedCached:
      return "SKIPPED_CACHED";
  }
  return "?";
}

std::string_view to_string(JobKind k) { return k == JobKind::kProduceSbom ? "produce-sbom" : "scan"; }

std::vector<ScanJob> plan_jobs(const ToolCatalog &catalog, const std::vector<ToolConfig> &configs,
                               const DatasetManifest &manifest) {
  if (manifest.empty()) throw ValidationError("manifest lists no images");
  std::set<std::string> ids;
  std::set<std::string> producers;
  for (const auto &c : configs) {
    catalog.validate_cell(c);
    const auto id = c.id();
    if (!ids.insert(id).second) throw ConfigError("configuration '" + id + "' listed twice");
    if (c.input_mode == InputMode::kImage) {
      require_placeholders(id, c.command_template, {"image", "out_path"});
    } else {
      require_placeholders(id, c.command_template, {"sbom_path", "out_path"});
      producers.insert(c.input_mode == InputMode::kNativeSbom ? c.tool_name : *c.sbom_source);
    }
  }

  std::vector<ScanJob> plan;
  std::map<std::pair<std::string, std::string>, std::size_t> sbom_job;
  for (const auto &producer : producers) {
    const auto &tool = catalog.get(producer);
    require_placeholders(producer + ":sbom", tool.produce_sbom_command, {"image", "out_path"});
    for (const auto &entry : manifest.entries()) {
      ScanJob job;
      job.kind = JobKind::kProduceSbom;
      job.tool_config_id = producer + ":sbom";
      job.tool_name = producer;
      job.image_ref = entry.image_ref;
      job.mode_key = "sbom";
      job.command_template = tool.produce_sbom_command;
      sbom_job[{producer, entry.image_ref}] = plan.size();
      plan.push_back(std::move(job));
    }
  }
  for (const auto &c : configs) {
    for (const auto &entry : manifest.entries()) {
      ScanJob job;
      job.kind = JobKind::kScan;
      job.tool_config_id = c.id();
      job.tool_name = c.tool_name;
      job.image_ref = entry.image_ref;
      job.command_template = c.command_template;
      switch (c.input_mode) {
        case InputMode::kImage:
          job.mode_key = "image";
          break;
        case InputMode::kNativeSbom:
          job.mode_key = "native-sbom";
          job.depends_on = sbom_job.at({c.tool_name, entry.image_ref});
          break;
        case InputMode::kExternalSbom:
          job.mode_key = *c.sbom_source + "-sbom";
          job.depends_on = sbom_job.at({*c.sbom_source, entry.image_ref});
          break;
      }
      plan.push_back(std::move(job));
    }
  }
  return plan;
}

Orchestrator::Orchestrator(const ToolCatalog &catalog, ProcessRunner &runner, RunOptions options)
    : catalog_(catalog), runner_(runner), options_(std::move(options)) {
  if (options_.workers == 0) options_.workers = 1;
}

std::optional<std::string> Orchestrator::tool_version(const std::string &tool, std::string *error) {
  const auto &def = catalog_.get(tool);
  if (!def.version.empty()) return def.version;
  std::lock_guard lock(version_mutex_);
  auto it = versions_.find(tool);
  if (it == versions_.end()) {
    std::optional<std::string> version;
    if (def.version_command.empty()) {
      version_errors_[tool] = "no pinned version and no version_command";
    } else {
      const auto res = runner_.run(def.version_command, std::chrono::milliseconds(60'000));
      auto line = first_line(res.stdout_text.empty() ? res.stderr_text : res.stdout_text);
      if (res.not_found) {
        version_errors_[tool] = "not-found: " + command_program(def.version_command);
      } else if (res.exit_code != 0 || line.empty()) {
        version_errors_[tool] = "version probe failed (exit " + std::to_string(res.exit_code) + ")";
      } else {
        version = line;
      }
    }
    it = versions_.emplace(tool, version).first;
  }
  if (!it->second && error) *error = version_errors_[tool];
  return it->second;
}

std::string Orchestrator::output_path_for(const ScanJob &job, const std::string &version) const {
  return (fs::path(options_.cache_dir) / path_component(job.tool_name) / path_component(version) /
          path_component(image_digest(job.image_ref)) / (job.mode_key + ".raw"))
      .string();
}

std::string Orchestrator::ledger_path() const { return (fs::path(options_.cache_dir) / "ledger.jsonl").string(); }

ScanJob Orchestrator::run_job(ScanJob job) {
  job.started_at = now_iso();
  auto finish = [&job](JobStatus status, std::string message) {
    job.status = status;
    job.message = std::move(message);
    job.finished_at = now_iso();
    return job;
  };

  std::string version_error;
  const auto version = tool_version(job.tool_name, &version_error);
  if (!version) return finish(JobStatus::kFailed, version_error);
  job.tool_version = *version;
  job.output_path = output_path_for(job, *version);
  const auto meta_path = sibling(job.output_path, ".meta");
  const auto log_path = sibling(job.output_path, ".log");

  if (!options_.force) {
    std::ifstream meta_in(meta_path);
    std::error_code ec;
    if (meta_in && fs::file_size(job.output_path, ec) > 0 && !ec) {
      const auto meta = nlohmann::json::parse(meta_in, nullptr, false);
      if (!meta.is_discarded() && meta.value("status", "") == "DONE" &&
          meta.value("tool_config_id", "") == job.tool_config_id && meta.value("image_ref", "") == job.image_ref &&
          meta.value("tool_version", "") == job.tool_version) {
        job.reported_version = meta.value("reported_version", "");
        return finish(JobStatus::kSkippedCached, "cached");
      }
    }
  }

  if (job.kind == JobKind::kScan && job.depends_on && job.sbom_path.empty()) {
    return finish(JobStatus::kFailed, "missing-sbom: dependency produced no SBOM");
  }

  std::error_code ec;
  fs::create_directories(fs::path(job.output_path).parent_path(), ec);
  if (ec) return finish(JobStatus::kFailed, "cannot create cache directory: " + ec.message());

  const auto tmp_path = job.output_path + ".tmp." + std::to_string(::getpid()) + "." +
                        std::to_string(g_tmp_counter.fetch_add(1));
  std::string command;
  try {
    command = render_command(job.command_template,
                             {{"image", job.image_ref}, {"sbom_path", job.sbom_path}, {"out_path", tmp_path}});
  } catch (const ConfigError &e) {
    return finish(JobStatus::kFailed, std::string("config: ") + e.what());
  }

  job.status = JobStatus::kRunning;
  const auto res = runner_.run(command, options_.timeout);
  job.exit_code = res.exit_code;
  {
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    log << "$ " << command << "\n--- stdout ---\n" << res.stdout_text << "\n--- stderr ---\n" << res.stderr_text;
  }
  auto discard_tmp = [&] { fs::remove(tmp_path, ec); };

  if (res.not_found) {
    discard_tmp();
    return finish(JobStatus::kFailed, "not-found: " + command_program(command));
  }
  if (res.timed_out) {
    discard_tmp();
    return finish(JobStatus::kFailed,
                  "timeout after " + std::to_string(options_.timeout.count() / 1000) + "s");
  }
  if (res.exit_code != 0) {
    discard_tmp();
    return finish(JobStatus::kFailed, "exit " + std::to_string(res.exit_code) + ": " + tail(res.stderr_text, 500));
  }
  const auto size = fs::file_size(tmp_path, ec);
  if (ec || size == 0) {
    discard_tmp();
    return finish(JobStatus::kFailed, "empty-output");
  }
  fs::rename(tmp_path, job.output_path, ec);
  if (ec) {
    discard_tmp();
    return finish(JobStatus::kFailed, "cannot move output into cache: " + ec.message());
  }

  const auto &def = catalog_.get(job.tool_name);
  if (!def.version.empty() && !def.version_command.empty()) {
    // What is actually installed, next to the pinned version; asked once per tool.
    std::lock_guard lock(version_mutex_);
    auto it = reported_versions_.find(job.tool_name);
    if (it == reported_versions_.end()) {
      const auto probe = runner_.run(def.version_command, std::chrono::milliseconds(60'000));
      std::string reported;
      if (probe.exit_code == 0) reported = first_line(probe.stdout_text.empty() ? probe.stderr_text : probe.stdout_text);
      it = reported_versions_.emplace(job.tool_name, reported).first;
    }
    job.reported_version = it->second;
  } else if (def.version.empty()) {
    job.reported_version = job.tool_version;
  }

  finish(JobStatus::kDone, "");
  ordered_json meta;
  meta["status"] = "DONE";
  meta["tool_config_id"] = job.tool_config_id;
  meta["tool"] = job.tool_name;
  meta["image_ref"] = job.image_ref;
  meta["mode"] = job.mode_key;
  meta["tool_version"] = job.tool_version;
  meta["reported_version"] = job.reported_version;
  meta["command"] = command;
  meta["started_at"] = job.started_at;
  meta["finished_at"] = job.finished_at;
  if (!write_atomically(meta_path, meta.dump(2) + "\n")) {
    return finish(JobStatus::kFailed, "cannot write cache metadata");
  }
  return job;
}

void Orchestrator::append_ledger(const ScanJob &job) {
  std::lock_guard lock(ledger_mutex_);
  std::error_code ec;
  fs::create_directories(options_.cache_dir, ec);
  std::ofstream out(ledger_path(), std::ios::binary | std::ios::app);
  out << job_to_json(job) << '\n';
  if (on_finished_) on_finished_(job);
}

std::vector<ScanJob> Orchestrator::run_plan(std::vector<ScanJob> plan) {
  std::vector<std::size_t> depth(plan.size(), 0);
  std::size_t max_depth = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (const auto dep = plan[i].depends_on) {
      if (*dep >= i) throw ValidationError("plan is not topologically ordered at job " + std::to_string(i));
      depth[i] = depth[*dep] + 1;
      max_depth = std::max(max_depth, depth[i]);
    }
  }
  for (std::size_t level = 0; level <= max_depth; ++level) {
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (depth[i] != level) continue;
      if (const auto dep = plan[i].depends_on) {
        const auto &d = plan[*dep];
        if (d.status != JobStatus::kDone && d.status != JobStatus::kSkippedCached) {
          plan[i].status = JobStatus::kFailed;
          plan[i].message = "dependency-failed: " + d.tool_config_id + " " + d.message;
          plan[i].started_at = plan[i].finished_at = now_iso();
          append_ledger(plan[i]);
          continue;
        }
        plan[i].sbom_path = d.output_path;
      }
      ready.push_back(i);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (auto n = next.fetch_add(1); n < ready.size(); n = next.fetch_add(1)) {
        auto &slot = plan[ready[n]];
        slot = run_job(std::move(slot));
        append_ledger(slot);
      }
    };
    const auto count = std::min<std::size_t>(options_.workers, ready.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(worker);
    worker();
    for (auto &t : threads) t.join();
  }
  return plan;
}

std::string job_to_json(const ScanJob &job) {
  ordered_json j;
  j["kind"] = std::string(to_string(job.kind));
  j["tool_config_id"] = job.tool_config_id;
  j["tool"] = job.tool_name;
  j["image_ref"] = job.image_ref;
  j["mode"] = job.mode_key;
  j["status"] = std::string(to_string(job.status));
  j["output_path"] = job.output_path;
  j["sbom_path"] = job.sbom_path;
  j["started_at"] = job.started_at;
  j["finished_at"] = job.finished_at;
  j["tool_version"] = job.tool_version;
  j["reported_version"] = job.reported_version;
  j["exit_code"] = job.exit_code ? ordered_json(*job.exit_code) : ordered_json(nullptr);
  j["message"] = job.message;
  return j.dump();
}

}  // namespace vexmatch
