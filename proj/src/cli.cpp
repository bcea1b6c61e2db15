#include "vexmatch/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "vexmatch/error.hpp"
#include "vexmatch/filters.hpp"
#include "vexmatch/matrix_io.hpp"
#include "vexmatch/orchestrator.hpp"
#include "vexmatch/parsers.hpp"
#include "vexmatch/record_io.hpp"
#include "vexmatch/similarity.hpp"

namespace vexmatch::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string cache_dir = "cache";
  std::string out_format = "csv";
  bool quiet = false;
};

struct FilterFlags {
  std::string subset;
  std::string manifest;
  std::vector<std::string> id_systems;
  bool exclude_temp = false;
  std::vector<std::string> statuses;

  void attach(CLI::App &cmd, bool with_id_system = true) {
    cmd.add_option("--subset", subset, "random, vulnerable, non_vulnerable or complete");
    cmd.add_option("--manifest", manifest, "dataset manifest labeling each image");
    if (with_id_system) {
      cmd.add_option("--id-system", id_systems, "keep only these identifier systems (repeatable)")->delimiter(',');
    }
    cmd.add_flag("--exclude-temp", exclude_temp, "drop TEMP-* identifiers");
    cmd.add_option("--status", statuses, "keep only these statuses (repeatable)")->delimiter(',');
  }

  FilterSpec spec() const {
    FilterSpec s;
    if (!subset.empty() && subset != "complete") s.subset = parse_subset(subset);
    if (!id_systems.empty()) {
      s.id_systems.emplace();
      for (const auto &id : id_systems) s.id_systems->insert(parse_id_system(id));
    }
    s.exclude_temp = exclude_temp;
    if (!statuses.empty()) {
      s.status_in.emplace();
      for (const auto &st : statuses) s.status_in->insert(parse_status(st));
    }
    validate(s);
    return s;
  }

  DatasetManifest load_manifest(const FilterSpec &s) const {
    if (manifest.empty()) {
      if (s.subset) throw ValidationError("--subset requires --manifest");
      return {};
    }
    return DatasetManifest::load(manifest);
  }
};

using RecordsByConfig = std::map<std::string, std::vector<VulnRecord>>;

/// Groups by tool_config_id before filtering, so a configuration whose
/// records are all filtered out still appears as an empty set.
RecordsByConfig load_grouped(const std::vector<std::string> &paths, const FilterFlags &flags) {
  const auto spec = flags.spec();
  const auto manifest = flags.load_manifest(spec);
  RecordsByConfig grouped;
  for (auto &r : read_record_paths(paths)) grouped[r.tool_config_id].push_back(std::move(r));
  for (auto &[id, records] : grouped) records = apply_filter(records, spec, manifest);
  return grouped;
}

SetsByLabel to_sets(const RecordsByConfig &grouped) {
  SetsByLabel sets;
  for (const auto &[id, records] : grouped) sets.emplace(id, RecordSet::from_records(id, records));
  return sets;
}

std::vector<std::string> read_label_order(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read label order file " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    labels.push_back(line.substr(first, last - first + 1));
  }
  return labels;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Writes to the path, or to `out` when the path is empty or "-".
template <typename Fn>
void emit(const std::string &path, std::ostream &out, Fn &&write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + path);
  write(file);
}

std::string join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? std::string(sep) : "") + items[i];
  return out;
}

Table agreement_table(const std::vector<GroupAgreement> &rows) {
  Table t;
  t.header = {"members", "tversky", "intersection_count", "union_count"};
  t.json_numeric = {false, true, true, true};
  for (const auto &g : rows) {
    auto score = format_score(g.tversky);
    t.rows.push_back({join(g.member_labels, ";"), g.empty_union() ? score + "*" : score,
                      std::to_string(g.intersection_count), std::to_string(g.union_count)});
  }
  // The flag marker is not valid JSON; it is carried by union_count == 0 there.
  return t;
}

void write_agreement(std::ostream &out, const std::vector<GroupAgreement> &rows, OutputFormat format) {
  auto t = agreement_table(rows);
  if (format == OutputFormat::kJson) {
    for (auto &row : t.rows) {
      if (!row[1].empty() && row[1].back() == '*') row[1].pop_back();
    }
  }
  write_table(out, t, format);
}

// ---------------------------------------------------------------- subcommands

struct ScanArgs {
  std::string config;
  std::string manifest;
  bool force = false;
  bool keep_going = false;
  unsigned workers = 0;
  unsigned timeout_seconds = 0;
  std::string normalize_to;
};

int cmd_scan(const ScanArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &err,
             ProcessRunner *runner) {
  ToolCatalog catalog;
  DatasetManifest manifest;
  std::vector<ScanJob> plan;
  try {
    catalog = ToolCatalog::load(a.config);
    manifest = DatasetManifest::load(a.manifest);
    plan = plan_jobs(catalog, catalog.selected_configs(), manifest);
  } catch (const DataError &e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  ShellProcessRunner shell;
  RunOptions options;
  options.cache_dir = g.cache_dir;
  options.force = a.force;
  options.workers = a.workers ? a.workers : catalog.workers();
  options.timeout = a.timeout_seconds ? std::chrono::seconds(a.timeout_seconds)
                                      : std::chrono::duration_cast<std::chrono::seconds>(catalog.timeout());
  Orchestrator orchestrator(catalog, runner ? *runner : shell, options);
  if (!g.quiet) {
    orchestrator.on_finished([&out](const ScanJob &job) {
      out << to_string(job.status) << ' ' << job.tool_config_id << ' ' << job.image_ref;
      if (!job.message.empty() && job.status == JobStatus::kFailed) out << " (" << job.message << ')';
      out << '\n';
    });
  }
  const auto done = orchestrator.run_plan(std::move(plan));

  std::size_t n_done = 0, n_cached = 0, n_failed = 0;
  for (const auto &j : done) {
    n_done += j.status == JobStatus::kDone;
    n_cached += j.status == JobStatus::kSkippedCached;
    n_failed += j.status == JobStatus::kFailed;
  }
  out << n_done << " done, " << n_cached << " skipped (cached), " << n_failed << " failed\n";

  int status = kOk;
  if (!a.normalize_to.empty()) {
    fs::create_directories(a.normalize_to);
    std::map<std::string, std::vector<VulnRecord>> by_config;
    for (const auto &j : done) {
      if (j.kind != JobKind::kScan) continue;
      by_config[j.tool_config_id];
      if (j.status != JobStatus::kDone && j.status != JobStatus::kSkippedCached) continue;
      const auto &tool = catalog.get(j.tool_name);
      if (!tool.report_format) {
        if (!g.quiet) err << "warning: " << j.tool_name << " declares no report_format; not normalized\n";
        continue;
      }
      try {
        auto parsed = parse_report(read_file(j.output_path), *tool.report_format, j.image_ref, j.tool_config_id);
        if (!g.quiet) {
          for (const auto &w : parsed.warnings) err << "warning: " << j.output_path << ": " << w << '\n';
        }
        auto &bucket = by_config[j.tool_config_id];
        bucket.insert(bucket.end(), parsed.records.begin(), parsed.records.end());
      } catch (const Error &e) {
        err << "error: " << j.output_path << ": " << e.what() << '\n';
        status = kDataError;
      }
    }
    for (auto &[id, records] : by_config) {
      std::ofstream file(fs::path(a.normalize_to) / (id + ".jsonl"), std::ios::binary | std::ios::trunc);
      write_records(file, std::move(records));
    }
  }

  const bool ok = n_failed == 0 || (a.keep_going && n_done + n_cached > 0);
  return ok ? status : kDataError;
}

struct NormalizeArgs {
  std::vector<std::string> raw_paths;
  std::string format;
  std::string image;
  std::string tool_config;
  std::string out;
};

int cmd_normalize(const NormalizeArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &err) {
  if (!has_pinned_digest(a.image)) throw ValidationError("--image '" + a.image + "' must be pinned by digest");
  std::optional<ReportFormat> forced;
  if (!a.format.empty()) forced = parse_format_name(a.format);
  std::vector<VulnRecord> records;
  for (const auto &path : a.raw_paths) {
    const auto raw = read_file(path);
    ReportFormat format;
    try {
      format = forced ? *forced : detect_format(raw);
    } catch (const AmbiguousFormatError &e) {
      err << "error: " << path << ": " << e.what() << '\n';
      return kDataError;
    } catch (const ValidationError &e) {
      err << "error: " << path << ": " << e.what() << '\n';
      return kDataError;
    }
    ParsedReport parsed;
    try {
      parsed = parse_report(raw, format, a.image, a.tool_config);
    } catch (const ParseError &e) {
      err << "error: " << path << ": " << e.what();
      if (e.offset() != ParseError::npos) err << " (byte offset " << e.offset() << ')';
      if (!e.path().empty()) err << " (at " << e.path() << ')';
      err << '\n';
      return kDataError;
    }
    if (!g.quiet) {
      for (const auto &w : parsed.warnings) err << "warning: " << path << ": " << w << '\n';
    }
    records.insert(records.end(), parsed.records.begin(), parsed.records.end());
  }
  std::size_t count = 0;
  emit(a.out, out, [&](std::ostream &o) { count = write_records(o, records); });
  const bool to_stdout = a.out.empty() || a.out == "-";
  (to_stdout ? err : out) << count << " records\n";
  return kOk;
}

struct MatrixArgs {
  std::vector<std::string> paths;
  FilterFlags filter;
  std::string label_order;
  std::string out;
};

int cmd_matrix(const MatrixArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &) {
  const auto format = parse_output_format(g.out_format);
  const auto sets = to_sets(load_grouped(a.paths, a.filter));
  if (sets.size() < 2) {
    throw ValidationError("matrix needs at least two tool configurations, found " + std::to_string(sets.size()));
  }
  std::vector<RecordSet> ordered;
  for (const auto &[id, s] : sets) ordered.push_back(s);
  auto matrix = pairwise_matrix(ordered);
  if (!a.label_order.empty()) matrix = matrix.reordered(read_label_order(a.label_order));
  emit(a.out, out, [&](std::ostream &o) { write_matrix(o, matrix, format); });
  return kOk;
}

struct AgreementArgs {
  std::vector<std::string> paths;
  FilterFlags filter;
  std::size_t group_size = 0;
  std::vector<std::string> members;
  std::string out;
};

int cmd_agreement(const AgreementArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &) {
  const auto format = parse_output_format(g.out_format);
  const auto sets = to_sets(load_grouped(a.paths, a.filter));
  std::vector<std::vector<std::string>> groups;
  if (!a.members.empty()) {
    groups.push_back(a.members);
  } else {
    std::vector<std::string> labels;
    for (const auto &[id, s] : sets) labels.push_back(id);
    groups = group_combinations(labels, a.group_size);
  }
  const auto rows = group_agreement(sets, groups);
  emit(a.out, out, [&](std::ostream &o) { write_agreement(o, rows, format); });
  return kOk;
}

struct CorrelateArgs {
  std::string a;
  std::string b;
  std::string cells = "upper";
};

int cmd_correlate(const CorrelateArgs &a, const GlobalOptions &, std::ostream &out, std::ostream &) {
  CellSelection cells;
  if (a.cells == "upper") {
    cells = CellSelection::kUpperTriangle;
  } else if (a.cells == "all") {
    cells = CellSelection::kAllCells;
  } else {
    throw ValidationError("--cells must be 'upper' or 'all'");
  }
  const auto m1 = read_matrix_file(a.a);
  const auto m2 = read_matrix_file(a.b);
  out << format_score(pearson_between_matrices(m1, m2, cells)) << '\n';
  return kOk;
}

struct ConsensusArgs {
  std::vector<std::string> paths;
  FilterFlags filter;
  std::vector<std::string> members;
  std::string out;
  std::string summary;
};

int cmd_consensus(const ConsensusArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &err) {
  const auto format = parse_output_format(g.out_format);
  const auto grouped = load_grouped(a.paths, a.filter);
  const auto sets = to_sets(grouped);
  const auto result = consensus(sets, a.members);

  // Each consensus key is written with the first member's record for it.
  std::vector<VulnRecord> records;
  std::set<MatchKey> written;
  for (const auto &member : a.members) {
    auto sorted = grouped.at(member);
    std::stable_sort(sorted.begin(), sorted.end(), canonical_less);
    for (const auto &r : sorted) {
      const auto key = r.key();
      if (!result.keys.contains(key) || !written.insert(key).second) continue;
      auto copy = r;
      copy.tool_config_id = result.keys.label();
      records.push_back(std::move(copy));
    }
  }
  emit(a.out, out, [&](std::ostream &o) { write_records(o, records); });
  // The summary shares stdout only when the records went to a file.
  const bool records_on_stdout = a.out.empty() || a.out == "-";
  auto &summary_stream = records_on_stdout ? err : out;
  emit(a.summary, summary_stream, [&](std::ostream &o) { write_agreement(o, {result.agreement}, format); });
  return kOk;
}

struct CoverageArgs {
  std::vector<std::string> paths;
  FilterFlags filter;
  std::vector<std::string> id_systems{"CVE"};
  std::string out;
};

int cmd_coverage(const CoverageArgs &a, const GlobalOptions &g, std::ostream &out, std::ostream &) {
  const auto format = parse_output_format(g.out_format);
  std::set<IdSystem> allow;
  for (const auto &s : a.id_systems) allow.insert(parse_id_system(s));

  auto base = a.filter;
  base.subset.clear();
  const auto grouped = load_grouped(a.paths, base);
  std::vector<std::pair<std::string, std::optional<Subset>>> rows{{"complete", std::nullopt}};
  DatasetManifest manifest;
  if (!a.filter.manifest.empty()) {
    manifest = DatasetManifest::load(a.filter.manifest);
    for (auto s : {Subset::kRandom, Subset::kVulnerable, Subset::kNonVulnerable}) {
      rows.emplace_back(std::string(to_string(s)), s);
    }
  }
  if (!a.filter.subset.empty() && a.filter.subset != "complete") {
    const auto only = parse_subset(a.filter.subset);
    rows.erase(std::remove_if(rows.begin(), rows.end(), [&](const auto &r) { return r.second != only; }), rows.end());
    if (rows.empty()) throw ValidationError("--subset requires --manifest");
  }

  Table t;
  t.header.push_back("subset");
  t.json_numeric.push_back(false);
  for (const auto &[id, records] : grouped) {
    t.header.push_back(id);
    t.json_numeric.push_back(format == OutputFormat::kJson);
  }
  for (const auto &[name, subset] : rows) {
    std::vector<std::string> row{name};
    FilterSpec spec;
    spec.subset = subset;
    for (const auto &[id, records] : grouped) {
      const auto selected = apply_filter(records, spec, manifest);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", 100.0 * coverage_fraction(selected, allow));
      row.push_back(std::string(buf) + (format == OutputFormat::kMarkdown ? "%" : ""));
    }
    t.rows.push_back(std::move(row));
  }
  emit(a.out, out, [&](std::ostream &o) { write_table(o, t, format); });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err, ProcessRunner *runner) {
  CLI::App app{"Normalize container vulnerability reports and measure cross-tool agreement", "vexmatch"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--cache-dir", g.cache_dir, "scan cache directory (VEXMATCH_CACHE overrides)");
  app.add_option("--out-format", g.out_format, "csv, json or md")
      ->check(CLI::IsMember({"csv", "json", "md", "markdown"}));
  app.add_flag("--quiet", g.quiet, "suppress progress and warnings");

  ScanArgs scan;
  auto *scan_cmd = app.add_subcommand("scan", "run scanners over the manifest and cache raw reports");
  scan_cmd->add_option("config", scan.config, "tool configuration file")->required();
  scan_cmd->add_option("manifest", scan.manifest, "dataset manifest")->required();
  scan_cmd->add_flag("--force", scan.force, "ignore cached artifacts");
  scan_cmd->add_flag("--keep-going", scan.keep_going, "succeed when at least one job finished");
  scan_cmd->add_option("--workers", scan.workers, "parallel jobs");
  scan_cmd->add_option("--timeout", scan.timeout_seconds, "per-job timeout in seconds");
  scan_cmd->add_option("--normalize-to", scan.normalize_to, "write canonical records per configuration here");

  NormalizeArgs norm;
  auto *norm_cmd = app.add_subcommand("normalize", "convert raw reports to canonical record lines");
  norm_cmd->add_option("raw", norm.raw_paths, "raw report files")->required();
  norm_cmd->add_option("--format", norm.format, "report format (detected when omitted)");
  norm_cmd->add_option("--image", norm.image, "image reference pinned by digest")->required();
  norm_cmd->add_option("--tool-config", norm.tool_config, "tool configuration id")->required();
  norm_cmd->add_option("--out", norm.out, "output file (stdout when omitted)");

  MatrixArgs matrix;
  auto *matrix_cmd = app.add_subcommand("matrix", "pairwise Jaccard matrix between configurations");
  matrix_cmd->add_option("records", matrix.paths, "record files or directories")->required();
  matrix.filter.attach(*matrix_cmd);
  matrix_cmd->add_option("--label-order", matrix.label_order, "file with one label per line");
  matrix_cmd->add_option("--out", matrix.out, "output file");

  AgreementArgs agree;
  auto *agree_cmd = app.add_subcommand("agreement", "n-ary agreement for groups of configurations");
  agree_cmd->add_option("records", agree.paths, "record files or directories")->required();
  agree.filter.attach(*agree_cmd);
  auto *k_opt = agree_cmd->add_option("--group-size", agree.group_size, "every group of this size");
  auto *m_opt = agree_cmd->add_option("--members", agree.members, "one explicit group")->delimiter(',');
  k_opt->excludes(m_opt);
  agree_cmd->add_option("--out", agree.out, "output file");

  CorrelateArgs corr;
  auto *corr_cmd = app.add_subcommand("correlate", "Pearson correlation between two matrices");
  corr_cmd->add_option("matrix_a", corr.a, "first matrix (CSV or JSON)")->required();
  corr_cmd->add_option("matrix_b", corr.b, "second matrix (CSV or JSON)")->required();
  corr_cmd->add_option("--cells", corr.cells, "upper (off-diagonal triangle) or all (every cell)")
      ->check(CLI::IsMember({"upper", "all"}));

  ConsensusArgs cons;
  auto *cons_cmd = app.add_subcommand("consensus", "keys every member reported");
  cons_cmd->add_option("records", cons.paths, "record files or directories")->required();
  cons.filter.attach(*cons_cmd);
  cons_cmd->add_option("--members", cons.members, "member configurations")->required()->delimiter(',');
  cons_cmd->add_option("--out", cons.out, "consensus record file");
  cons_cmd->add_option("--summary", cons.summary, "agreement summary file (default: stdout when --out is a file, else stderr)");

  CoverageArgs cov;
  auto *cov_cmd = app.add_subcommand("coverage", "share of records per identifier system");
  cov_cmd->add_option("records", cov.paths, "record files or directories")->required();
  cov.filter.attach(*cov_cmd, false);
  cov_cmd->add_option("--id-system", cov.id_systems, "systems counted as covered (default CVE)")->delimiter(',');
  cov_cmd->add_option("--out", cov.out, "output file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  if (const char *env = std::getenv("VEXMATCH_CACHE"); env && *env) g.cache_dir = env;
  if (agree_cmd->parsed() && agree.members.empty() && agree.group_size == 0) {
    err << "error: agreement needs --group-size or --members\n";
    return kUsageError;
  }

  try {
    if (scan_cmd->parsed()) return cmd_scan(scan, g, out, err, runner);
    if (norm_cmd->parsed()) return cmd_normalize(norm, g, out, err);
    if (matrix_cmd->parsed()) return cmd_matrix(matrix, g, out, err);
    if (agree_cmd->parsed()) return cmd_agreement(agree, g, out, err);
    if (corr_cmd->parsed()) return cmd_correlate(corr, g, out, err);
    if (cons_cmd->parsed()) return cmd_consensus(cons, g, out, err);
    if (cov_cmd->parsed()) return cmd_coverage(cov, g, out, err);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericDomainError &e) {
    err << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

int run(int argc, char **argv, std::ostream &out, std::ostream &err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace vexmatch::cli
