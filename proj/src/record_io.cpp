#include "vexmatch/record_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "vexmatch/error.hpp"

namespace vexmatch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json optional_string(const std::optional<std::string> &v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string required_string(const nlohmann::json &obj, const char *field, const std::string &where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(where + ": field '" + field + "' missing or not a string", where + "/" + field);
  }
  return it->get<std::string>();
}

std::optional<std::string> nullable_string(const nlohmann::json &obj, const char *field, const std::string &where) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError(where + ": field '" + field + "' missing", where + "/" + field);
  }
  if (it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(where + ": field '" + field + "' must be a string or null", where + "/" + field);
  }
  return it->get<std::string>();
}

constexpr std::size_t kFieldCount = 11;

}  // namespace

std::string to_json_line(const VulnRecord &r) {
  ordered_json j;
  j["image_ref"] = r.image_ref;
  j["component_id"] = r.component_id;
  j["component_name"] = r.component_name;
  j["component_version"] = r.component_version;
  j["vuln_id"] = r.vuln_id;
  j["id_system"] = std::string(to_string(r.id_system));
  j["status"] = std::string(to_string(r.status));
  j["severity"] = optional_string(r.severity);
  j["source_db"] = optional_string(r.source_db);
  j["tool_config_id"] = r.tool_config_id;
  j["observed_at"] = r.observed_at;
  return j.dump();
}

VulnRecord record_from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(std::string("malformed record line: ") + e.what(), "", e.byte);
  }
  const std::string where = "";
  if (!j.is_object()) throw ParseError("record line is not a JSON object", "");
  if (j.size() != kFieldCount) {
    throw ParseError("record line has " + std::to_string(j.size()) + " fields, expected " +
                         std::to_string(kFieldCount),
                     "");
  }
  VulnRecord r;
  r.image_ref = required_string(j, "image_ref", where);
  r.component_id = required_string(j, "component_id", where);
  r.component_name = required_string(j, "component_name", where);
  r.component_version = required_string(j, "component_version", where);
  r.vuln_id = required_string(j, "vuln_id", where);
  try {
    r.id_system = parse_id_system(required_string(j, "id_system", where));
    r.status = parse_status(required_string(j, "status", where));
  } catch (const ValidationError &e) {
    throw ParseError(e.what(), "");
  }
  r.severity = nullable_string(j, "severity", where);
  r.source_db = nullable_string(j, "source_db", where);
  r.tool_config_id = required_string(j, "tool_config_id", where);
  r.observed_at = required_string(j, "observed_at", where);
  validate(r);
  return r;
}

std::vector<VulnRecord> read_records(std::istream &in, const std::string &source_name) {
  std::vector<VulnRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json_line(line));
    } catch (const ParseError &e) {
      throw ParseError(source_name + ":" + std::to_string(line_no) + ": " + e.what(),
                       source_name + ":" + std::to_string(line_no), e.offset());
    } catch (const ValidationError &e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<VulnRecord> read_records_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read record file " + path);
  return read_records(in, path);
}

std::vector<VulnRecord> read_record_paths(const std::vector<std::string> &paths) {
  std::vector<VulnRecord> out;
  for (const auto &p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> files;
      for (const auto &entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto &f : files) {
        auto recs = read_records_file(f.string());
        out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
      }
    } else {
      auto recs = read_records_file(p);
      out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
  }
  return out;
}

std::size_t write_records(std::ostream &out, std::vector<VulnRecord> records) {
  std::stable_sort(records.begin(), records.end(), canonical_less);
  for (const auto &r : records) out << to_json_line(r) << '\n';
  return records.size();
}

}  // namespace vexmatch
