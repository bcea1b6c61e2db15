#include "vexmatch/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "vexmatch/error.hpp"

namespace vexmatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

template <typename Enum, std::size_t N>
Enum parse_token(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N> &table,
                 std::string_view what) {
  for (const auto &[name, value] : table) {
    if (iequals(name, trim(text))) return value;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::pair<std::string_view, IdSystem>, 8> kIdSystemNames{{
    {"CVE", IdSystem::kCve},
    {"GHSA", IdSystem::kGhsa},
    {"NSWG", IdSystem::kNswg},
    {"BIT", IdSystem::kBit},
    {"DSA", IdSystem::kDsa},
    {"NPM", IdSystem::kNpm},
    {"TEMP", IdSystem::kTemp},
    {"OTHER", IdSystem::kOther},
}};

constexpr std::array<std::pair<std::string_view, Status>, 5> kStatusNames{{
    {"AFFECTED", Status::kAffected},
    {"NOT_AFFECTED", Status::kNotAffected},
    {"UNDER_INVESTIGATION", Status::kUnderInvestigation},
    {"FIXED", Status::kFixed},
    {"UNSPECIFIED", Status::kUnspecified},
}};

constexpr std::array<std::pair<std::string_view, InputMode>, 3> kInputModeNames{{
    {"IMAGE", InputMode::kImage},
    {"NATIVE_SBOM", InputMode::kNativeSbom},
    {"EXTERNAL_SBOM", InputMode::kExternalSbom},
}};

constexpr std::array<std::pair<std::string_view, Subset>, 3> kSubsetNames{{
    {"random", Subset::kRandom},
    {"vulnerable", Subset::kVulnerable},
    {"non_vulnerable", Subset::kNonVulnerable},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<std::string_view, Enum>, N> &table) {
  for (const auto &[name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

bool is_hex(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

}  // namespace

std::string_view to_string(IdSystem s) { return name_of(s, kIdSystemNames); }
std::string_view to_string(Status s) { return name_of(s, kStatusNames); }
std::string_view to_string(InputMode m) { return name_of(m, kInputModeNames); }
std::string_view to_string(Subset s) { return name_of(s, kSubsetNames); }

IdSystem parse_id_system(std::string_view text) { return parse_token(text, kIdSystemNames, "identifier system"); }
Status parse_status(std::string_view text) { return parse_token(text, kStatusNames, "status"); }
InputMode parse_input_mode(std::string_view text) { return parse_token(text, kInputModeNames, "input mode"); }

Subset parse_subset(std::string_view text) {
  // "non-vulnerable" is accepted as a spelling of non_vulnerable.
  std::string t(trim(text));
  std::replace(t.begin(), t.end(), '-', '_');
  return parse_token(t, kSubsetNames, "subset label");
}

IdSystem classify_identifier(std::string_view vuln_id) {
  if (vuln_id.empty()) throw ValidationError("vulnerability identifier is empty");
  static constexpr std::array<std::pair<std::string_view, IdSystem>, 7> kPrefixes{{
      {"CVE-", IdSystem::kCve},
      {"GHSA-", IdSystem::kGhsa},
      {"NSWG-", IdSystem::kNswg},
      {"BIT-", IdSystem::kBit},
      {"DSA-", IdSystem::kDsa},
      {"NPM-", IdSystem::kNpm},
      {"TEMP-", IdSystem::kTemp},
  }};
  for (const auto &[prefix, system] : kPrefixes) {
    if (istarts_with(vuln_id, prefix)) return system;
  }
  return IdSystem::kOther;
}

std::string normalize_vuln_id(std::string_view raw) {
  auto t = trim(raw);
  if (t.empty()) throw ValidationError("vulnerability identifier is empty");
  return upper(t);
}

std::string normalize_component(std::string_view name, std::string_view version, std::string_view) {
  const auto n = trim(name);
  if (n.empty()) throw ValidationError("component name is empty");
  if (istarts_with(n, "pkg:")) {
    auto end = n.find_first_of("?#");
    return lower(n.substr(0, end));
  }
  const auto v = trim(version);
  if (v.empty()) return lower(n);
  return lower(n) + "@" + lower(v);
}

bool has_pinned_digest(std::string_view image_ref) {
  const auto at = image_ref.rfind('@');
  if (at == std::string_view::npos || at == 0) return false;
  const auto digest = image_ref.substr(at + 1);
  const auto colon = digest.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  const auto algo = digest.substr(0, colon);
  if (!std::all_of(algo.begin(), algo.end(), [](unsigned char c) { return std::isalnum(c); })) return false;
  return is_hex(digest.substr(colon + 1));
}

std::string image_digest(std::string_view image_ref) {
  if (!has_pinned_digest(image_ref)) {
    throw ValidationError("image reference '" + std::string(image_ref) + "' carries no digest");
  }
  return std::string(image_ref.substr(image_ref.rfind('@') + 1));
}

void validate(const VulnRecord &r) {
  if (r.vuln_id.empty()) throw ValidationError("record has empty vuln_id");
  if (trim(r.vuln_id) != r.vuln_id) {
    throw ValidationError("vuln_id '" + r.vuln_id + "' has surrounding whitespace");
  }
  if (r.id_system != classify_identifier(r.vuln_id)) {
    throw ValidationError("id_system " + std::string(to_string(r.id_system)) + " inconsistent with '" +
                          r.vuln_id + "'");
  }
  if (r.image_ref.empty()) throw ValidationError("record for " + r.vuln_id + " has empty image_ref");
  if (r.component_id.empty()) throw ValidationError("record for " + r.vuln_id + " has empty component_id");
}

VulnRecord make_record(std::string image_ref, std::string_view component_name,
                       std::string_view component_version, std::string_view component_namespace,
                       std::string_view raw_vuln_id, Status status, std::string tool_config_id) {
  VulnRecord r;
  r.image_ref = std::move(image_ref);
  r.component_id = normalize_component(component_name, component_version, component_namespace);
  r.component_name = std::string(component_name);
  r.component_version = std::string(component_version);
  r.vuln_id = normalize_vuln_id(raw_vuln_id);
  r.id_system = classify_identifier(r.vuln_id);
  r.status = status;
  r.tool_config_id = std::move(tool_config_id);
  return r;
}

bool canonical_less(const VulnRecord &a, const VulnRecord &b) {
  return std::tie(a.image_ref, a.component_id, a.vuln_id, a.tool_config_id, a.component_name,
                  a.component_version) < std::tie(b.image_ref, b.component_id, b.vuln_id,
                                                   b.tool_config_id, b.component_name,
                                                   b.component_version);
}

RecordSet RecordSet::from_records(std::string label, const std::vector<VulnRecord> &records) {
  RecordSet set(std::move(label));
  for (const auto &r : records) set.insert(r.key());
  return set;
}

std::string ToolConfig::id() const {
  switch (input_mode) {
    case InputMode::kImage:
      return tool_name;
    case InputMode::kNativeSbom:
      return tool_name + "+native-sbom";
    case InputMode::kExternalSbom:
      return tool_name + "+" + sbom_source.value_or("?") + "-sbom";
  }
  return tool_name;
}

ToolConfigId parse_tool_config_id(std::string_view id) {
  const auto t = trim(id);
  if (t.empty()) throw ValidationError("empty tool configuration id");
  const auto plus = t.find('+');
  ToolConfigId out;
  out.tool_name = lower(t.substr(0, plus));
  if (out.tool_name.empty()) throw ValidationError("tool configuration id '" + std::string(t) + "' has no tool");
  if (plus == std::string_view::npos) return out;
  const auto rest = lower(t.substr(plus + 1));
  constexpr std::string_view kSuffix = "-sbom";
  if (rest.size() <= kSuffix.size() || rest.compare(rest.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    throw ValidationError("tool configuration id '" + std::string(t) + "' must end in '-sbom' after '+'");
  }
  const auto source = rest.substr(0, rest.size() - kSuffix.size());
  if (source == "native") {
    out.input_mode = InputMode::kNativeSbom;
  } else {
    out.input_mode = InputMode::kExternalSbom;
    out.sbom_source = source;
  }
  return out;
}

void validate(const ToolConfig &config, const std::optional<Capabilities> &source_capabilities) {
  const auto &caps = config.capabilities;
  const auto id = config.id();
  switch (config.input_mode) {
    case InputMode::kImage:
      if (!caps.scan_image) throw ConfigError(id + ": " + config.tool_name + " cannot scan images");
      if (config.sbom_source) throw ConfigError(id + ": image mode takes no SBOM source");
      break;
    case InputMode::kNativeSbom:
      if (!caps.scan_sbom) throw ConfigError(id + ": " + config.tool_name + " cannot scan SBOMs");
      if (!caps.produce_sbom) throw ConfigError(id + ": " + config.tool_name + " cannot produce SBOMs");
      break;
    case InputMode::kExternalSbom:
      if (!caps.scan_sbom) throw ConfigError(id + ": " + config.tool_name + " cannot scan SBOMs");
      if (!config.sbom_source || config.sbom_source->empty()) {
        throw ConfigError(id + ": external SBOM input requires an SBOM source tool");
      }
      if (*config.sbom_source == config.tool_name) {
        throw ConfigError(id + ": an SBOM from the scanning tool itself is native, not external");
      }
      if (!source_capabilities) throw ConfigError(id + ": unknown SBOM source '" + *config.sbom_source + "'");
      if (!source_capabilities->produce_sbom) {
        throw ConfigError(id + ": " + *config.sbom_source + " cannot produce SBOMs");
      }
      break;
  }
}

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string_view> seen;
  for (const auto &e : entries_) {
    if (!has_pinned_digest(e.image_ref)) {
      throw ValidationError("manifest image '" + e.image_ref + "' is not pinned by digest");
    }
    if (!seen.insert(e.image_ref).second) {
      throw ValidationError("manifest lists image '" + e.image_ref + "' more than once");
    }
  }
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  std::vector<ManifestEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields{std::string(t)};
    std::string image, label, extra;
    fields >> image >> label;
    if (label.empty() || (fields >> extra)) {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": expected '<image@digest> <subset-label>'");
    }
    entries.push_back({image, parse_subset(label)});
  }
  return DatasetManifest(std::move(entries));
}

DatasetManifest DatasetManifest::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<Subset> DatasetManifest::subset_of(std::string_view image_ref) const {
  for (const auto &e : entries_) {
    if (e.image_ref == image_ref) return e.subset;
  }
  return std::nullopt;
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> labels, std::vector<double> row_major,
                                   std::vector<bool> empty_union)
    : labels_(std::move(labels)), values_(std::move(row_major)), empty_union_(std::move(empty_union)) {
  const auto n = labels_.size();
  if (values_.size() != n * n) {
    throw ValidationError("matrix has " + std::to_string(values_.size()) + " cells for " + std::to_string(n) +
                          " labels");
  }
  if (!empty_union_.empty() && empty_union_.size() != n * n) {
    throw ValidationError("matrix flag grid has the wrong size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = at(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("matrix cell (" + labels_[i] + ", " + labels_[j] + ") outside [0,1]");
      }
      if (i == j && v != 1.0) throw ValidationError("matrix diagonal at " + labels_[i] + " is not 1");
      if (std::abs(v - at(j, i)) > 1e-12) {
        throw ValidationError("matrix is not symmetric at (" + labels_[i] + ", " + labels_[j] + ")");
      }
    }
  }
}

SimilarityMatrix SimilarityMatrix::reordered(const std::vector<std::string> &order) const {
  const auto n = labels_.size();
  if (order.size() != n) throw ValidationError("label order has the wrong number of labels");
  std::vector<std::size_t> index;
  for (const auto &label : order) {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ValidationError("label order names unknown label '" + label + "'");
    index.push_back(static_cast<std::size_t>(it - labels_.begin()));
  }
  if (std::set<std::size_t>(index.begin(), index.end()).size() != n) {
    throw ValidationError("label order repeats a label");
  }
  std::vector<double> values(n * n);
  std::vector<bool> flags(empty_union_.empty() ? 0 : n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      values[i * n + j] = at(index[i], index[j]);
      if (!flags.empty()) flags[i * n + j] = empty_union(index[i], index[j]);
    }
  }
  return SimilarityMatrix(order, std::move(values), std::move(flags));
}

}  // namespace vexmatch
