#include "vexmatch/parsers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vexmatch/error.hpp"

namespace vexmatch {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ReportFormat, std::string_view>, 9> kFormatNames{{
    {ReportFormat::kGrypeNative, "grype"},
    {ReportFormat::kTrivyNative, "trivy"},
    {ReportFormat::kCycloneDxVex, "cyclonedx-vex"},
    {ReportFormat::kCsafVex, "csaf"},
    {ReportFormat::kOsvNative, "osv"},
    {ReportFormat::kScoutNative, "scout"},
    {ReportFormat::kSnykNative, "snyk"},
    {ReportFormat::kDepscanNative, "depscan"},
    {ReportFormat::kVexyNative, "vexy"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json parse_document(std::string_view raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what(), "",
                     e.byte);
  }
}

std::string child(const std::string &path, std::string_view key) { return path + "/" + std::string(key); }
std::string child(const std::string &path, std::size_t index) { return path + "/" + std::to_string(index); }

const json *find(const json &obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::optional<std::string> opt_string(const json &obj, std::string_view key) {
  const json *v = find(obj, key);
  if (v == nullptr || !v->is_string()) return std::nullopt;
  auto s = v->get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

std::string req_string(const json &obj, std::string_view key, const std::string &path) {
  auto v = opt_string(obj, key);
  if (!v) throw ParseError("missing string field at " + child(path, key), child(path, key));
  return *v;
}

const json &req_object(const json &obj, std::string_view key, const std::string &path) {
  const json *v = find(obj, key);
  if (v == nullptr || !v->is_object()) throw ParseError("missing object at " + child(path, key), child(path, key));
  return *v;
}

/// Array member, or an empty array when absent or null.
const json &opt_array(const json &obj, std::string_view key, const std::string &path) {
  static const json kEmpty = json::array();
  const json *v = find(obj, key);
  if (v == nullptr) return kEmpty;
  if (!v->is_array()) throw ParseError("expected array at " + child(path, key), child(path, key));
  return *v;
}

const json &req_root_object(const json &doc) {
  if (!doc.is_object()) throw ParseError("document root is not a JSON object", "");
  return doc;
}

void require_pinned(const std::string &image_ref) {
  if (!has_pinned_digest(image_ref)) {
    throw ValidationError("image reference '" + image_ref + "' must be pinned by digest");
  }
}

struct Component {
  std::string name;
  std::string version;
  std::string ns;
};

/// Prefers an explicit name/version pair; falls back to the package URL.
Component component_from(const std::optional<std::string> &name, const std::optional<std::string> &version,
                         const std::optional<std::string> &purl, const std::string &path) {
  if (name) return {*name, version.value_or(""), ""};
  if (purl) return {*purl, "", ""};
  throw ParseError("entry at " + path + " names no component", path);
}

class RecordBuilder {
 public:
  RecordBuilder(const std::string &image_ref, const std::string &tool_config_id, std::string observed_at)
      : image_ref_(image_ref), tool_config_id_(tool_config_id), observed_at_(std::move(observed_at)) {}

  void add(const Component &c, const std::string &raw_id, Status status, std::optional<std::string> severity,
           std::optional<std::string> source_db, const std::string &path) {
    VulnRecord r;
    try {
      r = make_record(image_ref_, c.name, c.version, c.ns, raw_id, status, tool_config_id_);
    } catch (const ValidationError &e) {
      throw ParseError(path + ": " + e.what(), path);
    }
    r.severity = std::move(severity);
    r.source_db = std::move(source_db);
    r.observed_at = observed_at_;
    validate(r);
    out_.records.push_back(std::move(r));
  }

  void warn(std::string message) { out_.warnings.push_back(std::move(message)); }
  std::size_t warning_count() const noexcept { return out_.warnings.size(); }

  ParsedReport take() { return std::move(out_); }

 private:
  const std::string &image_ref_;
  const std::string &tool_config_id_;
  std::string observed_at_;
  ParsedReport out_;
};

Status unknown_status(RecordBuilder &b, std::string_view token, const std::string &path) {
  b.warn(path + ": unknown status token '" + std::string(token) + "', recorded as UNSPECIFIED");
  return Status::kUnspecified;
}

bool is_object_with(const json *doc, std::string_view key) { return doc && doc->is_object() && doc->contains(key); }

// ---------------------------------------------------------------- grype

bool detect_grype(const SniffInput &in) {
  if (!is_object_with(in.document, "matches")) return false;
  const auto &m = (*in.document)["matches"];
  return m.is_array() && (m.empty() || (m[0].is_object() && m[0].contains("vulnerability")));
}

Status grype_status(RecordBuilder &b, const json &vulnerability, const std::string &path) {
  const json *fix = find(vulnerability, "fix");
  if (fix == nullptr) return Status::kUnspecified;
  auto state = opt_string(*fix, "state");
  if (!state || *state == "unknown") return Status::kUnspecified;
  if (*state == "not-fixed" || *state == "wont-fix") return Status::kAffected;
  if (*state == "fixed") return Status::kFixed;
  return unknown_status(b, *state, child(child(path, "fix"), "state"));
}

ParsedReport parse_grype(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  std::string observed;
  if (const json *d = find(root, "descriptor")) observed = opt_string(*d, "timestamp").value_or("");
  RecordBuilder b(image_ref, tool_config_id, observed);
  const json &matches = opt_array(root, "matches", "");
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const std::string path = child("/matches", i);
    const json &match = matches[i];
    const json &vuln = req_object(match, "vulnerability", path);
    const std::string vpath = child(path, "vulnerability");
    const json &artifact = req_object(match, "artifact", path);
    const std::string apath = child(path, "artifact");
    auto component = component_from(opt_string(artifact, "name"), opt_string(artifact, "version"),
                                    opt_string(artifact, "purl"), apath);
    b.add(component, req_string(vuln, "id", vpath), grype_status(b, vuln, vpath), opt_string(vuln, "severity"),
          opt_string(vuln, "namespace"), vpath);
  }
  return b.take();
}

// ---------------------------------------------------------------- trivy

bool detect_trivy(const SniffInput &in) {
  return is_object_with(in.document, "SchemaVersion") &&
         (in.document->contains("Results") || in.document->contains("ArtifactName"));
}

Status trivy_status(RecordBuilder &b, const json &v, const std::string &path) {
  auto s = opt_string(v, "Status");
  if (!s) return Status::kUnspecified;
  const auto t = lower(*s);
  if (t == "affected" || t == "will_not_fix" || t == "fix_deferred" || t == "end_of_life") return Status::kAffected;
  if (t == "fixed") return Status::kFixed;
  if (t == "not_affected") return Status::kNotAffected;
  if (t == "under_investigation") return Status::kUnderInvestigation;
  if (t == "unknown") return Status::kUnspecified;
  return unknown_status(b, *s, child(path, "Status"));
}

ParsedReport parse_trivy(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  if (!root.contains("SchemaVersion") && !root.contains("ArtifactName") && !root.contains("Results")) {
    throw ParseError("not a trivy report: no SchemaVersion, ArtifactName or Results", "");
  }
  RecordBuilder b(image_ref, tool_config_id, opt_string(root, "CreatedAt").value_or(""));
  const json &results = opt_array(root, "Results", "");
  for (std::size_t r = 0; r < results.size(); ++r) {
    const std::string rpath = child("/Results", r);
    const json &vulns = opt_array(results[r], "Vulnerabilities", rpath);
    for (std::size_t i = 0; i < vulns.size(); ++i) {
      const std::string path = child(child(rpath, "Vulnerabilities"), i);
      const json &v = vulns[i];
      std::optional<std::string> purl;
      if (const json *pid = find(v, "PkgIdentifier")) purl = opt_string(*pid, "PURL");
      auto component = component_from(opt_string(v, "PkgName"), opt_string(v, "InstalledVersion"), purl, path);
      std::optional<std::string> source;
      if (const json *ds = find(v, "DataSource")) source = opt_string(*ds, "ID");
      b.add(component, req_string(v, "VulnerabilityID", path), trivy_status(b, v, path), opt_string(v, "Severity"),
            source, path);
    }
  }
  return b.take();
}

// ---------------------------------------------------------------- cyclonedx (generic VEX and vexy)

bool produced_by_vexy(const json &root) {
  const json *metadata = find(root, "metadata");
  if (metadata == nullptr) return false;
  const json *tools = find(*metadata, "tools");
  if (tools == nullptr) return false;
  auto names_vexy = [](const json &list) {
    if (!list.is_array()) return false;
    return std::any_of(list.begin(), list.end(), [](const json &t) {
      auto name = opt_string(t, "name");
      return name && lower(*name) == "vexy";
    });
  };
  if (tools->is_array()) return names_vexy(*tools);
  if (const json *components = find(*tools, "components")) return names_vexy(*components);
  return false;
}

bool is_cyclonedx(const SniffInput &in) {
  if (!is_object_with(in.document, "bomFormat")) return false;
  const auto &f = (*in.document)["bomFormat"];
  return f.is_string() && f.get<std::string>() == "CycloneDX";
}

bool detect_cyclonedx(const SniffInput &in) { return is_cyclonedx(in) && !produced_by_vexy(*in.document); }
bool detect_vexy(const SniffInput &in) { return is_cyclonedx(in) && produced_by_vexy(*in.document); }

void index_components(const json &list, std::map<std::string, Component> &index, const std::string &path) {
  if (!list.is_array()) return;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json &c = list[i];
    const std::string cpath = child(path, i);
    if (auto ref = opt_string(c, "bom-ref")) {
      index[*ref] = component_from(opt_string(c, "name"), opt_string(c, "version"), opt_string(c, "purl"), cpath);
    }
    if (const json *nested = find(c, "components")) index_components(*nested, index, child(cpath, "components"));
  }
}

Status cyclonedx_status(RecordBuilder &b, const json &v, const std::string &path) {
  const json *analysis = find(v, "analysis");
  if (analysis == nullptr) return Status::kUnspecified;
  auto state = opt_string(*analysis, "state");
  if (!state) return Status::kUnspecified;
  if (*state == "exploitable") return Status::kAffected;
  if (*state == "resolved" || *state == "resolved_with_pedigree") return Status::kFixed;
  if (*state == "in_triage") return Status::kUnderInvestigation;
  if (*state == "not_affected" || *state == "false_positive") return Status::kNotAffected;
  return unknown_status(b, *state, child(child(path, "analysis"), "state"));
}

ParsedReport parse_cyclonedx_common(std::string_view raw, const std::string &image_ref,
                                    const std::string &tool_config_id, bool status_field) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  std::map<std::string, Component> components;
  std::string observed;
  if (const json *metadata = find(root, "metadata")) {
    observed = opt_string(*metadata, "timestamp").value_or("");
    if (const json *c = find(*metadata, "component")) {
      index_components(json::array({*c}), components, "/metadata/component");
    }
  }
  index_components(opt_array(root, "components", ""), components, "/components");
  RecordBuilder b(image_ref, tool_config_id, observed);
  const json &vulns = opt_array(root, "vulnerabilities", "");
  for (std::size_t i = 0; i < vulns.size(); ++i) {
    const std::string path = child("/vulnerabilities", i);
    const json &v = vulns[i];
    const auto id = req_string(v, "id", path);
    const std::size_t warnings_before = b.warning_count();
    const Status status = status_field ? cyclonedx_status(b, v, path) : Status::kUnspecified;
    const bool status_warned = b.warning_count() != warnings_before;
    std::optional<std::string> severity;
    const json &ratings = opt_array(v, "ratings", path);
    for (const auto &rating : ratings) {
      if ((severity = opt_string(rating, "severity"))) break;
    }
    std::optional<std::string> source;
    if (const json *s = find(v, "source")) source = opt_string(*s, "name");
    const json &affects = opt_array(v, "affects", path);
    if (affects.empty()) throw ParseError("vulnerability at " + path + " affects no component", child(path, "affects"));
    for (std::size_t a = 0; a < affects.size(); ++a) {
      const std::string apath = child(child(path, "affects"), a);
      auto ref = req_string(affects[a], "ref", apath);
      // BOM-Link references ("urn:cdx:<serial>/<version>#<bom-ref>") point into another BOM.
      std::string local = ref;
      if (ref.rfind("urn:cdx:", 0) == 0 && ref.find('#') != std::string::npos) local = ref.substr(ref.find('#') + 1);
      auto it = components.find(local);
      const Component c = it != components.end() ? it->second : Component{local, "", ""};
      // Every record carrying the unknown token gets its own diagnostic.
      if (status_warned && a > 0) b.warn(apath + ": unknown status token, recorded as UNSPECIFIED");
      b.add(c, id, status, severity, source, apath);
    }
  }
  return b.take();
}

ParsedReport parse_cyclonedx(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  return parse_cyclonedx_common(raw, image_ref, tool_config_id, true);
}

// Vexy writes CycloneDX but carries no analysis state.
ParsedReport parse_vexy(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  return parse_cyclonedx_common(raw, image_ref, tool_config_id, false);
}

// ---------------------------------------------------------------- csaf

bool detect_csaf(const SniffInput &in) {
  if (!is_object_with(in.document, "document")) return false;
  const auto &d = (*in.document)["document"];
  return d.is_object() && d.contains("csaf_version");
}

struct CsafProduct {
  std::optional<std::string> name;
  std::optional<std::string> version;
  std::optional<std::string> purl;
  std::optional<std::string> full_name;
  std::optional<std::string> component_ref;  // set for relationship products
};

std::optional<std::string> helper_purl(const json &product) {
  if (const json *h = find(product, "product_identification_helper")) return opt_string(*h, "purl");
  return std::nullopt;
}

void walk_csaf_branches(const json &branches, std::optional<std::string> name, std::optional<std::string> version,
                        std::map<std::string, CsafProduct> &products, const std::string &path) {
  if (!branches.is_array()) return;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const json &br = branches[i];
    const std::string bpath = child(path, i);
    auto category = opt_string(br, "category").value_or("");
    auto bname = opt_string(br, "name");
    auto n = name;
    auto v = version;
    if (category == "product_name") n = bname;
    if (category == "product_version") v = bname;
    if (const json *product = find(br, "product")) {
      const auto pid = req_string(*product, "product_id", child(bpath, "product"));
      products[pid] = CsafProduct{n, v, helper_purl(*product), opt_string(*product, "name"), std::nullopt};
    }
    if (const json *nested = find(br, "branches")) walk_csaf_branches(*nested, n, v, products, child(bpath, "branches"));
  }
}

std::map<std::string, CsafProduct> index_csaf_products(const json &root) {
  std::map<std::string, CsafProduct> products;
  const json *tree = find(root, "product_tree");
  if (tree == nullptr) return products;
  if (const json *branches = find(*tree, "branches")) {
    walk_csaf_branches(*branches, std::nullopt, std::nullopt, products, "/product_tree/branches");
  }
  const json &full = opt_array(*tree, "full_product_names", "/product_tree");
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto pid = req_string(full[i], "product_id", child("/product_tree/full_product_names", i));
    products[pid] = CsafProduct{std::nullopt, std::nullopt, helper_purl(full[i]), opt_string(full[i], "name"),
                                std::nullopt};
  }
  const json &rels = opt_array(*tree, "relationships", "/product_tree");
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const std::string rpath = child("/product_tree/relationships", i);
    const json &fpn = req_object(rels[i], "full_product_name", rpath);
    const auto pid = req_string(fpn, "product_id", child(rpath, "full_product_name"));
    CsafProduct p;
    p.full_name = opt_string(fpn, "name");
    p.component_ref = req_string(rels[i], "product_reference", rpath);
    products[pid] = p;
  }
  return products;
}

Component resolve_csaf_component(const std::map<std::string, CsafProduct> &products, const std::string &pid,
                                 const std::string &path) {
  auto it = products.find(pid);
  if (it == products.end()) throw ParseError("unknown product id '" + pid + "' at " + path, path);
  // A relationship product may point at a plain product; follow one level.
  if (it->second.component_ref) {
    auto base = products.find(*it->second.component_ref);
    if (base == products.end() || base->second.component_ref) {
      throw ParseError("unresolvable product_reference '" + *it->second.component_ref + "' at " + path, path);
    }
    it = base;
  }
  const auto &p = it->second;
  if (p.name) return {*p.name, p.version.value_or(""), ""};
  if (p.purl) return {*p.purl, "", ""};
  if (p.full_name) return {*p.full_name, "", ""};
  throw ParseError("product '" + pid + "' has no usable name at " + path, path);
}

ParsedReport parse_csaf(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  std::string observed;
  if (const json *d = find(root, "document")) {
    if (const json *t = find(*d, "tracking")) observed = opt_string(*t, "current_release_date").value_or("");
  }
  const auto products = index_csaf_products(root);
  RecordBuilder b(image_ref, tool_config_id, observed);

  static const std::map<std::string, Status> kBuckets = {
      {"known_affected", Status::kAffected},   {"first_affected", Status::kAffected},
      {"last_affected", Status::kAffected},    {"known_not_affected", Status::kNotAffected},
      {"fixed", Status::kFixed},               {"first_fixed", Status::kFixed},
      {"under_investigation", Status::kUnderInvestigation},
  };

  const json &vulns = opt_array(root, "vulnerabilities", "");
  for (std::size_t i = 0; i < vulns.size(); ++i) {
    const std::string path = child("/vulnerabilities", i);
    const json &v = vulns[i];
    auto id = opt_string(v, "cve");
    std::optional<std::string> source;
    const json &ids = opt_array(v, "ids", path);
    if (!ids.empty()) {
      if (!id) id = opt_string(ids[0], "text");
      source = opt_string(ids[0], "system_name");
    }
    if (!id) throw ParseError("vulnerability at " + path + " has neither 'cve' nor 'ids'", child(path, "cve"));
    std::optional<std::string> severity;
    for (const auto &score : opt_array(v, "scores", path)) {
      for (const char *key : {"cvss_v3", "cvss_v2"}) {
        if (const json *cvss = find(score, key)) severity = opt_string(*cvss, "baseSeverity");
        if (severity) break;
      }
      if (severity) break;
    }
    const json *buckets = find(v, "product_status");
    if (buckets == nullptr || !buckets->is_object()) continue;
    for (const auto &[bucket, pids] : buckets->items()) {
      const std::string bpath = child(child(path, "product_status"), bucket);
      if (!pids.is_array()) throw ParseError("expected array at " + bpath, bpath);
      auto st = kBuckets.find(bucket);
      for (std::size_t p = 0; p < pids.size(); ++p) {
        const std::string ppath = child(bpath, p);
        if (!pids[p].is_string()) throw ParseError("expected product id string at " + ppath, ppath);
        const Status status = st != kBuckets.end() ? st->second : unknown_status(b, bucket, bpath);
        b.add(resolve_csaf_component(products, pids[p].get<std::string>(), ppath), *id, status, severity, source,
              ppath);
      }
    }
  }
  return b.take();
}

// ---------------------------------------------------------------- osv-scanner

bool detect_osv(const SniffInput &in) {
  if (!is_object_with(in.document, "results")) return false;
  const auto &r = (*in.document)["results"];
  return r.is_array() && (r.empty() || (r[0].is_object() && r[0].contains("packages")));
}

ParsedReport parse_osv(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  RecordBuilder b(image_ref, tool_config_id, "");
  const json &results = opt_array(root, "results", "");
  for (std::size_t r = 0; r < results.size(); ++r) {
    const std::string rpath = child("/results", r);
    const json &packages = opt_array(results[r], "packages", rpath);
    for (std::size_t p = 0; p < packages.size(); ++p) {
      const std::string ppath = child(child(rpath, "packages"), p);
      const json &pkg = req_object(packages[p], "package", ppath);
      const std::string pkgpath = child(ppath, "package");
      auto component = component_from(opt_string(pkg, "name"), opt_string(pkg, "version"), opt_string(pkg, "purl"),
                                      pkgpath);
      auto ecosystem = opt_string(pkg, "ecosystem");
      const json &vulns = opt_array(packages[p], "vulnerabilities", ppath);
      for (std::size_t i = 0; i < vulns.size(); ++i) {
        const std::string path = child(child(ppath, "vulnerabilities"), i);
        std::optional<std::string> severity;
        if (const json *ds = find(vulns[i], "database_specific")) severity = opt_string(*ds, "severity");
        b.add(component, req_string(vulns[i], "id", path), Status::kUnspecified, severity, ecosystem, path);
      }
    }
  }
  return b.take();
}

// ---------------------------------------------------------------- docker scout (GitLab container-scanning JSON)

bool detect_scout(const SniffInput &in) {
  if (!is_object_with(in.document, "scan") || !in.document->contains("vulnerabilities")) return false;
  const json *scanner = find((*in.document)["scan"], "scanner");
  if (scanner == nullptr) return false;
  auto id = opt_string(*scanner, "id").value_or("") + " " + opt_string(*scanner, "name").value_or("");
  return lower(id).find("scout") != std::string::npos;
}

ParsedReport parse_scout(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  const json &root = req_root_object(doc);
  std::string observed;
  if (const json *scan = find(root, "scan")) observed = opt_string(*scan, "end_time").value_or("");
  RecordBuilder b(image_ref, tool_config_id, observed);
  const json &vulns = opt_array(root, "vulnerabilities", "");
  for (std::size_t i = 0; i < vulns.size(); ++i) {
    const std::string path = child("/vulnerabilities", i);
    const json &v = vulns[i];
    const json &ids = opt_array(v, "identifiers", path);
    std::optional<std::string> id;
    for (const auto &ident : ids) {
      if ((id = opt_string(ident, "value"))) break;
    }
    if (!id) throw ParseError("vulnerability at " + path + " has no identifier value", child(path, "identifiers"));
    const json &location = req_object(v, "location", path);
    const std::string lpath = child(path, "location");
    const json &dependency = req_object(location, "dependency", lpath);
    const std::string dpath = child(lpath, "dependency");
    std::optional<std::string> name;
    if (const json *pkg = find(dependency, "package")) name = opt_string(*pkg, "name");
    auto component = component_from(name, opt_string(dependency, "version"), std::nullopt, dpath);
    // A published solution means a fixed release exists.
    const Status status = opt_string(v, "solution") ? Status::kFixed : Status::kAffected;
    b.add(component, *id, status, opt_string(v, "severity"), opt_string(location, "operating_system"), path);
  }
  return b.take();
}

// ---------------------------------------------------------------- snyk container test --json

bool is_snyk_project(const json &obj) {
  return obj.is_object() && obj.contains("vulnerabilities") && !obj.contains("bomFormat") &&
         (obj.contains("packageManager") || obj.contains("projectName"));
}

bool detect_snyk(const SniffInput &in) {
  if (in.document == nullptr) return false;
  if (in.document->is_array()) {
    return !in.document->empty() && std::all_of(in.document->begin(), in.document->end(), is_snyk_project);
  }
  return is_snyk_project(*in.document);
}

void parse_snyk_project(RecordBuilder &b, const json &project, const std::string &ppath) {
  const json &vulns = opt_array(project, "vulnerabilities", ppath);
  for (std::size_t i = 0; i < vulns.size(); ++i) {
    const std::string path = child(child(ppath, "vulnerabilities"), i);
    const json &v = vulns[i];
    // Snyk's own id is the fallback; a CVE alias is the identity other tools use.
    std::optional<std::string> id;
    if (const json *idents = find(v, "identifiers")) {
      const json &cves = opt_array(*idents, "CVE", child(path, "identifiers"));
      if (!cves.empty() && cves[0].is_string()) id = cves[0].get<std::string>();
    }
    if (!id) id = req_string(v, "id", path);
    auto component = component_from(opt_string(v, "packageName"), opt_string(v, "version"), std::nullopt, path);
    const json &fixed_in = opt_array(v, "fixedIn", path);
    const Status status = fixed_in.empty() ? Status::kAffected : Status::kFixed;
    b.add(component, *id, status, opt_string(v, "severity"), std::nullopt, path);
  }
}

ParsedReport parse_snyk(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  const json doc = parse_document(raw);
  RecordBuilder b(image_ref, tool_config_id, "");
  if (doc.is_array()) {
    for (std::size_t p = 0; p < doc.size(); ++p) parse_snyk_project(b, doc[p], child("", p));
  } else {
    parse_snyk_project(b, req_root_object(doc), "");
  }
  return b.take();
}

// ---------------------------------------------------------------- depscan JSON-lines findings

bool is_depscan_line(const json *line) {
  return line && line->is_object() && line->contains("id") && line->contains("purl") &&
         (line->contains("package_type") || line->contains("fix_version"));
}

bool detect_depscan(const SniffInput &in) { return is_depscan_line(in.first_line); }

ParsedReport parse_depscan(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id) {
  RecordBuilder b(image_ref, tool_config_id, "");
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < raw.size()) {
    auto end = raw.find('\n', offset);
    if (end == std::string_view::npos) end = raw.size();
    const auto line = raw.substr(offset, end - offset);
    const std::string path = "/" + std::to_string(line_no);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      json v;
      try {
        v = json::parse(line);
      } catch (const json::parse_error &e) {
        throw ParseError("malformed JSON line " + std::to_string(line_no + 1) + ": " + e.what(), path,
                         offset + (e.byte > 0 ? e.byte - 1 : 0));
      }
      if (!v.is_object()) throw ParseError("line " + std::to_string(line_no + 1) + " is not an object", path);
      auto component = component_from(opt_string(v, "package"), opt_string(v, "version"), opt_string(v, "purl"), path);
      const Status status = opt_string(v, "fix_version") ? Status::kFixed : Status::kAffected;
      b.add(component, req_string(v, "id", path), status, opt_string(v, "severity"), std::nullopt, path);
    }
    ++line_no;
    offset = end + 1;
  }
  return b.take();
}

}  // namespace

std::string_view format_name(ReportFormat f) {
  for (const auto &[format, name] : kFormatNames) {
    if (format == f) return name;
  }
  return "?";
}

ReportFormat parse_format_name(std::string_view name) {
  const auto n = lower(name);
  for (const auto &[format, fname] : kFormatNames) {
    if (fname == n) return format;
  }
  std::string known;
  for (const auto &[format, fname] : kFormatNames) known += (known.empty() ? "" : ", ") + std::string(fname);
  throw ValidationError("unknown report format '" + std::string(name) + "' (known: " + known + ")");
}

const std::vector<ParserDescriptor> &parser_registry() {
  static const std::vector<ParserDescriptor> kRegistry = {
      {ReportFormat::kGrypeNative, detect_grype, parse_grype},
      {ReportFormat::kTrivyNative, detect_trivy, parse_trivy},
      {ReportFormat::kCycloneDxVex, detect_cyclonedx, parse_cyclonedx},
      {ReportFormat::kCsafVex, detect_csaf, parse_csaf},
      {ReportFormat::kOsvNative, detect_osv, parse_osv},
      {ReportFormat::kScoutNative, detect_scout, parse_scout},
      {ReportFormat::kSnykNative, detect_snyk, parse_snyk},
      {ReportFormat::kDepscanNative, detect_depscan, parse_depscan},
      {ReportFormat::kVexyNative, detect_vexy, parse_vexy},
  };
  return kRegistry;
}

ReportFormat detect_format(std::string_view raw) {
  if (raw.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ValidationError("cannot detect the format of an empty document");
  }
  std::optional<json> document;
  std::optional<json> first_line;
  document = json::parse(raw, nullptr, false);
  if (document->is_discarded()) document.reset();
  {
    std::istringstream in{std::string(raw)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      first_line = json::parse(line, nullptr, false);
      if (first_line->is_discarded()) first_line.reset();
      break;
    }
  }
  const SniffInput input{raw, document ? &*document : nullptr, first_line ? &*first_line : nullptr};
  std::vector<std::string> accepted;
  ReportFormat found = ReportFormat::kGrypeNative;
  for (const auto &d : parser_registry()) {
    if (d.detect(input)) {
      accepted.emplace_back(format_name(d.format));
      found = d.format;
    }
  }
  if (accepted.size() == 1) return found;
  if (accepted.empty()) throw AmbiguousFormatError("no known report format matches the document", {});
  std::string list;
  for (const auto &a : accepted) list += (list.empty() ? "" : ", ") + a;
  throw AmbiguousFormatError("document matches several formats: " + list, accepted);
}

ParsedReport parse_report(std::string_view raw, ReportFormat format, const std::string &image_ref,
                          const std::string &tool_config_id) {
  require_pinned(image_ref);
  if (tool_config_id.empty()) throw ValidationError("tool configuration id is empty");
  if (raw.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  for (const auto &d : parser_registry()) {
    if (d.format == format) return d.parse(raw, image_ref, tool_config_id);
  }
  throw ValidationError("no parser registered for format");
}

}  // namespace vexmatch
