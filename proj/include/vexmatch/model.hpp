#pragma once

// Canonical domain types shared by every vexmatch module.

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vexmatch {

enum class IdSystem { kCve, kGhsa, kNswg, kBit, kDsa, kNpm, kTemp, kOther };

/// VEX exploitability status. kUnspecified marks a source format with no
/// status field at all; it is never a synonym for kNotAffected.
enum class Status { kAffected, kNotAffected, kUnderInvestigation, kFixed, kUnspecified };

enum class InputMode { kImage, kNativeSbom, kExternalSbom };

enum class Subset { kRandom, kVulnerable, kNonVulnerable };

std::string_view to_string(IdSystem s);
std::string_view to_string(Status s);
std::string_view to_string(InputMode m);
std::string_view to_string(Subset s);

// Case-insensitive; throw ValidationError on unknown tokens.
IdSystem parse_id_system(std::string_view text);
Status parse_status(std::string_view text);
InputMode parse_input_mode(std::string_view text);
Subset parse_subset(std::string_view text);

/// Family of a vulnerability identifier, decided by case-insensitive prefix
/// ("CVE-", "GHSA-", "NSWG-", "BIT-", "DSA-", "NPM-", "TEMP-"); anything else
/// is kOther. Throws ValidationError on empty input.
IdSystem classify_identifier(std::string_view vuln_id);

/// Trimmed, uppercased identifier. Throws ValidationError if nothing is left.
std::string normalize_vuln_id(std::string_view raw);

/// Cross-tool component identity.
///
/// A package-URL name ("pkg:...") is returned lowercased with its qualifiers
/// and subpath removed; the version argument is ignored in that case because
/// the purl already carries one. Otherwise the result is lowercase
/// "name@version", or just the lowercase name when the version is empty.
/// The namespace (distro, ecosystem) never contributes. Throws
/// ValidationError when the name is empty.
std::string normalize_component(std::string_view name, std::string_view version,
                                std::string_view ns = {});

/// True when the reference pins an image by content digest
/// ("repo/name@<algo>:<hex>").
bool has_pinned_digest(std::string_view image_ref);

/// The "<algo>:<hex>" part of a pinned image reference. Throws
/// ValidationError when the reference carries no digest.
std::string image_digest(std::string_view image_ref);

struct MatchKey {
  std::string image_ref;
  std::string component_id;
  std::string vuln_id;

  auto operator<=>(const MatchKey &) const = default;
  bool operator==(const MatchKey &) const = default;
};

struct VulnRecord {
  std::string image_ref;
  std::string component_id;
  std::string component_name;
  std::string component_version;
  std::string vuln_id;
  IdSystem id_system = IdSystem::kOther;
  Status status = Status::kUnspecified;
  std::optional<std::string> severity;
  std::optional<std::string> source_db;
  std::string tool_config_id;
  std::string observed_at;

  MatchKey key() const { return {image_ref, component_id, vuln_id}; }

  bool operator==(const VulnRecord &) const = default;
};

/// Throws ValidationError naming the first violated VulnRecord invariant.
void validate(const VulnRecord &record);

/// Builds a record with normalized identifiers and a derived id_system.
VulnRecord make_record(std::string image_ref, std::string_view component_name,
                       std::string_view component_version, std::string_view component_namespace,
                       std::string_view raw_vuln_id, Status status, std::string tool_config_id);

/// Order used by every emitted record file.
bool canonical_less(const VulnRecord &a, const VulnRecord &b);

/// Labeled set of match keys; duplicate insertions are idempotent.
class RecordSet {
 public:
  RecordSet() = default;
  explicit RecordSet(std::string label) : label_(std::move(label)) {}
  RecordSet(std::string label, std::set<MatchKey> keys)
      : label_(std::move(label)), keys_(std::move(keys)) {}

  static RecordSet from_records(std::string label, const std::vector<VulnRecord> &records);

  void insert(MatchKey key) { keys_.insert(std::move(key)); }
  bool contains(const MatchKey &key) const { return keys_.count(key) != 0; }

  const std::string &label() const noexcept { return label_; }
  const std::set<MatchKey> &keys() const noexcept { return keys_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

 private:
  std::string label_;
  std::set<MatchKey> keys_;
};

struct Capabilities {
  bool scan_sbom = false;
  bool produce_sbom = false;
  bool scan_image = false;

  bool operator==(const Capabilities &) const = default;
};

/// One cell of the tool-configuration matrix: a tool run in one input mode.
struct ToolConfig {
  std::string tool_name;
  InputMode input_mode = InputMode::kImage;
  std::optional<std::string> sbom_source;
  Capabilities capabilities;
  std::string command_template;
  std::set<std::string> databases;

  /// "trivy", "trivy+native-sbom", or "trivy+scout-sbom".
  std::string id() const;
};

/// Parses an id produced by ToolConfig::id() into (tool, mode, source).
struct ToolConfigId {
  std::string tool_name;
  InputMode input_mode = InputMode::kImage;
  std::optional<std::string> sbom_source;
};
ToolConfigId parse_tool_config_id(std::string_view id);

/// Checks the mode against the tool's own capabilities and, for external
/// SBOM input, that the source tool can produce one. Throws ConfigError.
void validate(const ToolConfig &config, const std::optional<Capabilities> &source_capabilities);

struct ManifestEntry {
  std::string image_ref;
  Subset subset = Subset::kRandom;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  /// Throws ValidationError for unpinned or duplicated images.
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  /// One "image@sha256:digest subset-label" per line; blank lines and
  /// lines starting with '#' are ignored.
  static DatasetManifest parse(std::string_view text);
  static DatasetManifest load(const std::string &path);

  const std::vector<ManifestEntry> &entries() const noexcept { return entries_; }
  std::optional<Subset> subset_of(std::string_view image_ref) const;
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<ManifestEntry> entries_;
};

/// Square labeled score matrix, symmetric with unit diagonal. Cells whose
/// value comes from the empty/empty convention are flagged.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  /// Throws ValidationError if the grid is not n*n, a value leaves [0,1],
  /// the grid is asymmetric, or the diagonal differs from 1.
  SimilarityMatrix(std::vector<std::string> labels, std::vector<double> row_major,
                   std::vector<bool> empty_union = {});

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string> &labels() const noexcept { return labels_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * labels_.size() + j]; }
  bool empty_union(std::size_t i, std::size_t j) const {
    return !empty_union_.empty() && empty_union_[i * labels_.size() + j];
  }
  const std::vector<double> &values() const noexcept { return values_; }

  /// Copy reordered to the given label order (a permutation of labels()).
  SimilarityMatrix reordered(const std::vector<std::string> &order) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
  std::vector<bool> empty_union_;
};

}  // namespace vexmatch
