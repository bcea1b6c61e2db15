#pragma once

// Canonical record files: one flat JSON object per line, keyed by the
// VulnRecord field names, sorted by (image_ref, component_id, vuln_id).

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vexmatch/model.hpp"

namespace vexmatch {

std::string to_json_line(const VulnRecord &record);

/// Throws ParseError (with the line number as path) on malformed lines and
/// ValidationError when a record breaks an invariant.
VulnRecord record_from_json_line(std::string_view line);

std::vector<VulnRecord> read_records(std::istream &in, const std::string &source_name = "<stream>");
std::vector<VulnRecord> read_records_file(const std::string &path);

/// Reads every *.jsonl file under each path (files are read directly).
/// Directory entries are visited in lexicographic order.
std::vector<VulnRecord> read_record_paths(const std::vector<std::string> &paths);

/// Sorts a copy canonically and writes it; returns the number of lines.
std::size_t write_records(std::ostream &out, std::vector<VulnRecord> records);

}  // namespace vexmatch
