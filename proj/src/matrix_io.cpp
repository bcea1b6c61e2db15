#include "vexmatch/matrix_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vexmatch/error.hpp"

namespace vexmatch {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line, const std::string &where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError(where + ": unterminated quoted field", where);
  fields.push_back(cur);
  return fields;
}

std::string cell_text(const SimilarityMatrix &m, std::size_t i, std::size_t j) {
  return format_score(m.at(i, j)) + (m.empty_union(i, j) ? "*" : "");
}

double parse_number(std::string text, const std::string &where, bool &flagged) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.pop_back();
  flagged = !text.empty() && text.back() == '*';
  if (flagged) text.pop_back();
  const auto first = text.find_first_not_of(" \t");
  if (first == std::string::npos) throw ParseError(where + ": empty cell", where);
  text = text.substr(first);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    throw ParseError(where + ": not a number: '" + text + "'", where);
  }
  if (used != text.size()) throw ParseError(where + ": not a number: '" + text + "'", where);
  return v;
}

SimilarityMatrix read_matrix_json(std::string_view text, const std::string &source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(source + ": malformed JSON: " + e.what(), source, e.byte);
  }
  if (!j.is_object() || !j.contains("labels") || !j.contains("values")) {
    throw ParseError(source + ": matrix JSON needs 'labels' and 'values'", source);
  }
  std::vector<std::string> labels;
  std::vector<double> values;
  try {
    labels = j["labels"].get<std::vector<std::string>>();
    for (const auto &row : j["values"]) {
      if (!row.is_array() || row.size() != labels.size()) throw ParseError(source + ": ragged values", source);
      for (const auto &v : row) values.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(source + ": " + e.what(), source);
  }
  const auto n = labels.size();
  std::vector<bool> flags(n * n, false);
  if (j.contains("empty_union")) {
    for (const auto &pair : j["empty_union"]) {
      if (!pair.is_array() || pair.size() != 2) throw ParseError(source + ": bad empty_union entry", source);
      const auto a = pair[0].get<std::size_t>();
      const auto b = pair[1].get<std::size_t>();
      if (a >= n || b >= n) throw ParseError(source + ": empty_union index out of range", source);
      flags[a * n + b] = flags[b * n + a] = true;
    }
  }
  return SimilarityMatrix(std::move(labels), std::move(values), std::move(flags));
}

}  // namespace

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  if (name == "md" || name == "markdown") return OutputFormat::kMarkdown;
  throw ValidationError("unknown output format '" + std::string(name) + "' (csv, json, md)");
}

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

void write_matrix(std::ostream &out, const SimilarityMatrix &m, OutputFormat format) {
  const auto n = m.size();
  if (format == OutputFormat::kJson) {
    ordered_json j;
    j["labels"] = m.labels();
    auto rows = ordered_json::array();
    auto flagged = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
      auto row = ordered_json::array();
      for (std::size_t jx = 0; jx < n; ++jx) {
        // Round through the display text so JSON and CSV agree digit for digit.
        row.push_back(std::stod(format_score(m.at(i, jx))));
        if (jx >= i && m.empty_union(i, jx)) flagged.push_back({i, jx});
      }
      rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    j["empty_union"] = std::move(flagged);
    out << j.dump(2) << '\n';
    return;
  }
  Table t;
  t.header.push_back("");
  for (const auto &l : m.labels()) t.header.push_back(l);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{m.labels()[i]};
    for (std::size_t j = 0; j < n; ++j) row.push_back(cell_text(m, i, j));
    t.rows.push_back(std::move(row));
  }
  write_table(out, t, format);
}

SimilarityMatrix read_matrix(std::string_view text, const std::string &source) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw ParseError(source + ": empty matrix file", source);
  if (text[first] == '{') return read_matrix_json(text, source);

  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(split_csv_line(line, source + ":" + std::to_string(line_no)));
  }
  if (lines.front().size() < 2 || !lines.front().front().empty()) {
    throw ParseError(source + ": header must be an empty corner cell followed by labels", source + ":1");
  }
  std::vector<std::string> labels(lines.front().begin() + 1, lines.front().end());
  const auto n = labels.size();
  if (lines.size() != n + 1) {
    throw ParseError(source + ": expected " + std::to_string(n) + " data rows, found " +
                         std::to_string(lines.size() - 1),
                     source);
  }
  std::vector<double> values;
  std::vector<bool> flags;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &row = lines[i + 1];
    const std::string where = source + ": row " + std::to_string(i + 1);
    if (row.size() != n + 1) throw ParseError(where + " has " + std::to_string(row.size()) + " cells", where);
    if (row[0] != labels[i]) {
      throw ParseError(where + " is labeled '" + row[0] + "' but column " + std::to_string(i + 1) + " is '" +
                           labels[i] + "'",
                       where);
    }
    for (std::size_t j = 0; j < n; ++j) {
      bool flagged = false;
      values.push_back(parse_number(row[j + 1], where, flagged));
      flags.push_back(flagged);
    }
  }
  return SimilarityMatrix(std::move(labels), std::move(values), std::move(flags));
}

SimilarityMatrix read_matrix_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read matrix file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_matrix(buf.str(), path);
}

void write_table(std::ostream &out, const Table &t, OutputFormat format) {
  switch (format) {
    case OutputFormat::kCsv: {
      auto emit = [&](const std::vector<std::string> &row) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
        out << '\n';
      };
      emit(t.header);
      for (const auto &row : t.rows) emit(row);
      break;
    }
    case OutputFormat::kJson: {
      auto rows = ordered_json::array();
      for (const auto &row : t.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t i = 0; i < row.size() && i < t.header.size(); ++i) {
          const bool numeric = i < t.json_numeric.size() && t.json_numeric[i];
          if (numeric) {
            obj[t.header[i]] = ordered_json::parse(row[i]);
          } else {
            obj[t.header[i]] = row[i];
          }
        }
        rows.push_back(std::move(obj));
      }
      out << rows.dump(2) << '\n';
      break;
    }
    case OutputFormat::kMarkdown: {
      std::vector<std::size_t> width(t.header.size(), 3);
      for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = std::max(width[i], t.header[i].size());
      for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
      }
      auto emit = [&](const std::vector<std::string> &row) {
        out << '|';
        for (std::size_t i = 0; i < width.size(); ++i) {
          const std::string cell = i < row.size() ? row[i] : "";
          out << ' ' << cell << std::string(width[i] - cell.size(), ' ') << " |";
        }
        out << '\n';
      };
      emit(t.header);
      out << '|';
      for (auto w : width) out << std::string(w + 2, '-') << '|';
      out << '\n';
      for (const auto &row : t.rows) emit(row);
      break;
    }
  }
}

}  // namespace vexmatch
