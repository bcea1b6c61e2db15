#pragma once

// Declarative tool catalog.
//
// INI-style file, one section per tool plus an optional [run] section:
//
//   [tool:trivy]
//   scan_sbom = true
//   produce_sbom = true
//   scan_image = true
//   version = 0.52.0
//   version_command = trivy --version
//   image_command = trivy image -q -f json -o {out_path} {image}
//   sbom_command = trivy sbom -q -f json -o {out_path} {sbom_path}
//   produce_sbom_command = trivy image -q -f cyclonedx -o {out_path} {image}
//   sbom_format = cyclonedx
//   accepts_sbom_formats = cyclonedx, spdx
//   databases = nvd, ghsa, debian
//   report_format = trivy
//
//   [run]
//   configurations = trivy, grype+native-sbom, osv+scout-sbom
//   timeout_seconds = 900
//   workers = 4

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vexmatch/model.hpp"
#include "vexmatch/parsers.hpp"

namespace vexmatch {

struct ToolDefinition {
  std::string name;
  Capabilities capabilities;
  std::string version;  // pinned; empty means probe with version_command
  std::string version_command;
  std::string image_command;
  std::string sbom_command;
  std::string produce_sbom_command;
  std::optional<std::string> sbom_format;
  std::set<std::string> accepted_sbom_formats;
  std::set<std::string> databases;
  std::optional<ReportFormat> report_format;
};

class ToolCatalog {
 public:
  static constexpr std::chrono::seconds kDefaultTimeout{15 * 60};
  static constexpr unsigned kDefaultWorkers = 4;

  /// Throws ConfigError with the offending section/key.
  static ToolCatalog parse(std::string_view text);
  static ToolCatalog load(const std::string &path);

  void add(ToolDefinition tool);

  const std::map<std::string, ToolDefinition> &tools() const noexcept { return tools_; }
  const ToolDefinition *find(std::string_view name) const;
  const ToolDefinition &get(std::string_view name) const;

  /// Configuration ids listed under [run]; empty means "every valid cell".
  const std::vector<std::string> &requested() const noexcept { return requested_; }
  std::chrono::seconds timeout() const noexcept { return timeout_; }
  unsigned workers() const noexcept { return workers_; }

  /// Builds the cell for an id such as "osv+scout-sbom". Throws ConfigError
  /// for unknown tools.
  ToolConfig make_config(std::string_view id) const;
  ToolConfig make_config(const ToolConfigId &id) const;

  /// Every cell the capability matrix admits by mode alone: image scanning
  /// per tool, native SBOM per tool that both produces and scans, and
  /// external SBOM for every (scanner, other producer) pair. SBOM format
  /// compatibility is not checked here.
  std::vector<ToolConfig> candidate_configs() const;

  /// Capability and SBOM-format checks for one cell. Throws ConfigError.
  void validate_cell(const ToolConfig &config) const;

  /// candidate_configs() minus the cells validate_cell() rejects, with the
  /// rejection messages.
  std::vector<ToolConfig> valid_configs(std::vector<std::string> *rejections = nullptr) const;

  /// The configurations a scan should run: requested() when present (each
  /// validated), otherwise valid_configs().
  std::vector<ToolConfig> selected_configs() const;

 private:
  std::map<std::string, ToolDefinition> tools_;
  std::vector<std::string> requested_;
  std::chrono::seconds timeout_ = kDefaultTimeout;
  unsigned workers_ = kDefaultWorkers;
};

}  // namespace vexmatch
