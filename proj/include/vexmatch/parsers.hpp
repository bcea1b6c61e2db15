#pragma once

// Raw scanner reports to canonical VulnRecords.
//
// Every supported format has a ParserDescriptor in the registry: a sniffing
// predicate used by detect_format and a parse routine. Parsers are pure
// functions of their input bytes and never touch the network.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vexmatch/model.hpp"

namespace vexmatch {

enum class ReportFormat {
  kGrypeNative,
  kTrivyNative,
  kCycloneDxVex,
  kCsafVex,
  kOsvNative,
  kScoutNative,
  kSnykNative,
  kDepscanNative,
  kVexyNative,
};

/// CLI-visible name: grype, trivy, cyclonedx-vex, csaf, osv, scout, snyk,
/// depscan, vexy.
std::string_view format_name(ReportFormat f);
/// Throws ValidationError for unknown names.
ReportFormat parse_format_name(std::string_view name);

/// What the sniffers see: the raw bytes, the whole document if it parses as
/// JSON, and the first non-blank line if that parses on its own.
struct SniffInput {
  std::string_view raw;
  const nlohmann::json *document = nullptr;
  const nlohmann::json *first_line = nullptr;
};

struct ParsedReport {
  std::vector<VulnRecord> records;
  std::vector<std::string> warnings;
};

struct ParserDescriptor {
  ReportFormat format;
  bool (*detect)(const SniffInput &);
  ParsedReport (*parse)(std::string_view raw, const std::string &image_ref, const std::string &tool_config_id);
};

const std::vector<ParserDescriptor> &parser_registry();

/// The unique format whose sniffer accepts the document. Throws
/// ValidationError on empty input and AmbiguousFormatError when zero or
/// several sniffers accept.
ReportFormat detect_format(std::string_view raw);

/// One record per (component, vulnerability) entry, in document order.
/// Throws ParseError with a byte offset or JSON pointer on malformed input
/// and ValidationError when image_ref is not pinned by digest. Unknown
/// status tokens yield kUnspecified plus a warning.
ParsedReport parse_report(std::string_view raw, ReportFormat format, const std::string &image_ref,
                          const std::string &tool_config_id);

}  // namespace vexmatch
