#pragma once

// Tabular output (CSV, JSON, aligned markdown) for matrices and row reports.
// Scores are printed with four decimals; cells produced by the empty/empty
// convention carry a trailing '*' in CSV and markdown and are listed under
// "empty_union" in JSON.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vexmatch/model.hpp"

namespace vexmatch {

enum class OutputFormat { kCsv, kJson, kMarkdown };

/// csv, json, md (or markdown). Throws ValidationError otherwise.
OutputFormat parse_output_format(std::string_view name);

/// Fixed four-decimal rendering used for every score.
std::string format_score(double value);

void write_matrix(std::ostream &out, const SimilarityMatrix &m, OutputFormat format);

/// Reads the CSV or JSON written by write_matrix (JSON is recognised by a
/// leading '{'). Throws ParseError on malformed input and ValidationError
/// when the grid breaks a matrix invariant.
SimilarityMatrix read_matrix(std::string_view text, const std::string &source_name = "<matrix>");
SimilarityMatrix read_matrix_file(const std::string &path);

/// A header plus rows of preformatted cells; json_numeric marks columns
/// emitted as JSON numbers rather than strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<bool> json_numeric;
};

void write_table(std::ostream &out, const Table &table, OutputFormat format);

}  // namespace vexmatch
