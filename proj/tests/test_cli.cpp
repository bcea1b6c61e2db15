#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vexmatch/record_io.hpp"

using testing::cli;
using testing::fixture;
using testing::slurp;
using testing::spit;

namespace {

const std::string kImage = "neo4j@" + testing::digest_of(42);

std::string records_for(const std::string &tool, const std::vector<int> &keys) {
  std::vector<vexmatch::VulnRecord> out;
  for (int k : keys) {
    const auto key = testing::key(k);
    auto r = vexmatch::make_record(key.image_ref, key.component_id, "", "", key.vuln_id, vexmatch::Status::kAffected, tool);
    out.push_back(r);
  }
  std::ostringstream s;
  vexmatch::write_records(s, out);
  return s.str();
}

std::size_t lines(const std::string &s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--out-format", "xml", "matrix", "x"}).code == 2);
  const auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("correlate") != std::string::npos);
}

TEST_CASE("normalize the grype excerpt") {
  const auto r = cli({"normalize", fixture("reports/grype_apt.json"), "--format", "grype", "--image", kImage,
                      "--tool-config", "grype"});
  CHECK(r.code == 0);
  REQUIRE(lines(r.out) == 1);
  const auto rec = vexmatch::record_from_json_line(r.out.substr(0, r.out.size() - 1));
  CHECK(rec.vuln_id == "CVE-2011-3374");
  CHECK(r.err == "1 records\n");

  // Detection gives the same bytes.
  const auto detected =
      cli({"normalize", fixture("reports/grype_apt.json"), "--image", kImage, "--tool-config", "grype"});
  CHECK(detected.out == r.out);
}

TEST_CASE("normalize failures") {
  const auto ambiguous =
      cli({"normalize", fixture("reports/ambiguous.json"), "--image", kImage, "--tool-config", "x"});
  CHECK(ambiguous.code == 1);
  CHECK(ambiguous.err.find("grype, osv") != std::string::npos);

  const auto malformed = cli({"normalize", fixture("reports/depscan_bad.jsonl"), "--format", "depscan", "--image",
                              kImage, "--tool-config", "x"});
  CHECK(malformed.code == 1);
  CHECK(malformed.err.find("depscan_bad.jsonl") != std::string::npos);
  CHECK(malformed.err.find("byte offset") != std::string::npos);

  testing::TempDir dir;
  spit(dir / "empty.json", "");
  CHECK(cli({"normalize", dir / "empty.json", "--image", kImage, "--tool-config", "x"}).code == 1);
  CHECK(cli({"normalize", fixture("reports/grype_apt.json"), "--image", "neo4j:latest", "--tool-config", "x"})
            .code == 2);
  CHECK(cli({"normalize", dir / "absent.json", "--image", kImage, "--tool-config", "x"}).code == 1);
}

TEST_CASE("matrix") {
  testing::TempDir dir;
  spit(dir / "a.jsonl", records_for("a", {1, 2}));
  spit(dir / "b.jsonl", records_for("b", {3}));
  const auto r = cli({"matrix", dir.str()});
  CHECK(r.code == 0);
  CHECK(r.out == ",a,b\na,1.0000,0.0000\nb,0.0000,1.0000\n");

  const auto json = cli({"--out-format", "json", "matrix", dir / "a.jsonl", dir / "b.jsonl"});
  CHECK(nlohmann::json::parse(json.out)["values"] == nlohmann::json::parse("[[1.0,0.0],[0.0,1.0]]"));

  spit(dir / "order.txt", "b\na\n");
  CHECK(cli({"matrix", dir.str(), "--label-order", dir / "order.txt"}).out ==
        ",b,a\nb,1.0000,0.0000\na,0.0000,1.0000\n");

  CHECK(cli({"matrix", dir / "a.jsonl"}).code == 2);

  // image 0 is labeled, the others are not.
  spit(dir / "m.txt", testing::image(0) + " random\n");
  CHECK(cli({"matrix", dir.str(), "--subset", "vulnerable", "--manifest", dir / "m.txt"}).code == 1);
  CHECK(cli({"matrix", dir.str(), "--subset", "vulnerable"}).code == 2);
  CHECK(cli({"matrix", dir.str(), "--id-system", "TEMP", "--exclude-temp"}).code == 2);
  CHECK(cli({"matrix", dir.str(), "--status", "sideways"}).code == 2);
}

TEST_CASE("matrix over the end-to-end corpus, all and CVE-only") {
  testing::TempDir dir;
  REQUIRE(testing::normalize_e2e_corpus(dir.str()));
  // Hand-computed from the planted keys.
  CHECK(cli({"matrix", dir.str()}).out ==
        ",grype,osv,trivy\n"
        "grype,1.0000,0.2857,0.5000\n"
        "osv,0.2857,1.0000,0.4286\n"
        "trivy,0.5000,0.4286,1.0000\n");
  CHECK(cli({"matrix", dir.str(), "--id-system", "cve"}).out ==
        ",grype,osv,trivy\n"
        "grype,1.0000,0.4000,0.6000\n"
        "osv,0.4000,1.0000,0.7500\n"
        "trivy,0.6000,0.7500,1.0000\n");
  // Excluding TEMP only removes trivy's placeholder entry.
  CHECK(cli({"matrix", dir.str(), "--exclude-temp"}).out ==
        ",grype,osv,trivy\n"
        "grype,1.0000,0.2857,0.6000\n"
        "osv,0.2857,1.0000,0.5000\n"
        "trivy,0.6000,0.5000,1.0000\n");
  const auto affected = cli({"matrix", dir.str(), "--status", "AFFECTED"});
  CHECK(affected.out.find("grype,1.0000,0.0000,0.5000\n") != std::string::npos);
  CHECK(affected.out.find("osv,0.0000,1.0000*,0.0000") != std::string::npos);
}

TEST_CASE("agreement") {
  testing::TempDir dir;
  for (int t = 0; t < 7; ++t) {
    std::vector<int> keys = {0, 1};
    keys.push_back(10 + t);
    spit(dir / ("t" + std::to_string(t) + ".jsonl"), records_for("tool" + std::to_string(t), keys));
  }
  const auto six = cli({"agreement", dir.str(), "--group-size", "6"});
  CHECK(six.code == 0);
  CHECK(lines(six.out) == 1 + 7);
  CHECK(six.out.rfind("members,tversky,intersection_count,union_count\n", 0) == 0);
  // Two shared keys, six private ones.
  CHECK(six.out.find("tool0;tool1;tool2;tool3;tool4;tool5,0.2500,2,8\n") != std::string::npos);
  CHECK(lines(cli({"agreement", dir.str(), "--group-size", "5"}).out) == 1 + 21);

  const auto four = cli({"agreement", dir.str(), "--members", "tool0,tool1,tool2,tool3"});
  CHECK(four.out == "members,tversky,intersection_count,union_count\ntool0;tool1;tool2;tool3,0.3333,2,6\n");

  CHECK(cli({"agreement", dir.str(), "--group-size", "1"}).code == 2);
  CHECK(cli({"agreement", dir.str(), "--group-size", "8"}).code == 2);
  CHECK(cli({"agreement", dir.str()}).code == 2);
  CHECK(cli({"agreement", dir.str(), "--members", "tool0,nope"}).code == 2);
}

TEST_CASE("correlate") {
  const auto a = fixture("matrices/report_similarity_no_temp.csv");
  const auto b = fixture("matrices/database_coverage.csv");
  CHECK(cli({"correlate", a, a}).out == "1.0000\n");
  CHECK(cli({"correlate", a, b}).out == "0.3592\n");
  CHECK(cli({"correlate", a, b, "--cells", "all"}).out == "0.8852\n");
  CHECK(cli({"correlate", a, b, "--cells", "diag"}).code == 2);

  testing::TempDir dir;
  spit(dir / "two.csv", ",a,b\na,1,0.5\nb,0.5,1\n");
  CHECK(cli({"correlate", dir / "two.csv", dir / "two.csv"}).code == 2);
  spit(dir / "x.csv", ",a,b,c\na,1,0.5,0.2\nb,0.5,1,0.3\nc,0.2,0.3,1\n");
  spit(dir / "y.csv", ",a,b,d\na,1,0.5,0.2\nb,0.5,1,0.3\nd,0.2,0.3,1\n");
  spit(dir / "flat.csv", ",a,b,c\na,1,0.5,0.5\nb,0.5,1,0.5\nc,0.5,0.5,1\n");
  CHECK(cli({"correlate", dir / "x.csv", dir / "y.csv"}).code == 2);
  CHECK(cli({"correlate", dir / "x.csv", dir / "flat.csv"}).code == 3);
  spit(dir / "bad.csv", "not a matrix");
  CHECK(cli({"correlate", dir / "x.csv", dir / "bad.csv"}).code == 1);
}

TEST_CASE("consensus") {
  testing::TempDir dir;
  const auto same = records_for("a", {1, 2, 3});
  spit(dir / "same/a.jsonl", same);
  std::string copy = same;
  for (std::size_t pos; (pos = copy.find("\"tool_config_id\":\"a\"")) != std::string::npos;) {
    copy.replace(pos, 20, "\"tool_config_id\":\"b\"");
  }
  spit(dir / "same/b.jsonl", copy);
  auto r = cli({"consensus", dir / "same", "--members", "a,b", "--out", dir / "c.jsonl"});
  CHECK(r.code == 0);
  CHECK(r.out == "members,tversky,intersection_count,union_count\na;b,1.0000,3,3\n");
  const auto consensus = vexmatch::read_records_file(dir / "c.jsonl");
  REQUIRE(consensus.size() == 3);
  for (const auto &rec : consensus) CHECK(rec.tool_config_id == "consensus(a,b)");
  auto original = vexmatch::read_records_file(dir / "same/a.jsonl");
  for (std::size_t i = 0; i < 3; ++i) CHECK(consensus[i].key() == original[i].key());

  for (int t = 0; t < 4; ++t) {
    spit(dir / ("disjoint/t" + std::to_string(t) + ".jsonl"), records_for("t" + std::to_string(t), {t * 2, t * 2 + 1}));
  }
  r = cli({"consensus", dir / "disjoint", "--members", "t0,t1,t2,t3", "--out", dir / "none.jsonl"});
  CHECK(r.code == 0);
  CHECK(slurp(dir / "none.jsonl").empty());
  CHECK(r.out.find(",0.0000,0,8\n") != std::string::npos);

  r = cli({"consensus", dir / "disjoint", "--members", "t0,t1"});
  CHECK(r.out.empty());
  CHECK(r.err.find("t0;t1,0.0000,0,4") != std::string::npos);
  CHECK(cli({"consensus", dir / "disjoint", "--members", "t0"}).code == 2);
}

TEST_CASE("coverage") {
  testing::TempDir dir;
  REQUIRE(testing::normalize_e2e_corpus(dir.str()));
  const auto r = cli({"coverage", dir.str(), "--manifest", fixture("e2e/manifest.txt")});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "subset,grype,osv,trivy\n"
        "complete,100.0,60.0,80.0\n"
        "random,100.0,100.0,50.0\n"
        "vulnerable,100.0,50.0,100.0\n"
        "non_vulnerable,100.0,50.0,100.0\n");
  CHECK(cli({"coverage", dir.str()}).out == "subset,grype,osv,trivy\ncomplete,100.0,60.0,80.0\n");
  CHECK(cli({"coverage", dir.str(), "--id-system", "CVE,GHSA"}).out ==
        "subset,grype,osv,trivy\ncomplete,100.0,100.0,80.0\n");
  CHECK(cli({"coverage", dir.str(), "--manifest", fixture("e2e/manifest.txt"), "--subset", "random"}).out ==
        "subset,grype,osv,trivy\nrandom,100.0,100.0,50.0\n");
}

TEST_CASE("analysis outputs are byte-identical across runs") {
  testing::TempDir dir;
  REQUIRE(testing::normalize_e2e_corpus(dir.str()));
  for (const auto &fmt : {"csv", "json", "md"}) {
    const std::vector<std::vector<std::string>> invocations = {
        {"--out-format", fmt, "matrix", dir.str()},
        {"--out-format", fmt, "agreement", dir.str(), "--group-size", "2"},
        {"--out-format", fmt, "consensus", dir.str(), "--members", "grype,osv,trivy", "--out", "-"},
        {"--out-format", fmt, "coverage", dir.str()},
    };
    for (const auto &args : invocations) {
      const auto first = cli(args);
      const auto second = cli(args);
      CHECK(first.code == 0);
      CHECK(first.out == second.out);
      CHECK(first.err == second.err);
    }
  }
}

TEST_CASE("scan") {
  testing::TempDir dir;
  const auto config = fixture("config/catalog.ini");
  spit(dir / "two.txt", testing::image(0) + " random\n" + testing::image(1) + " vulnerable\n");
  spit(dir / "empty.txt", "# nothing\n");
  testing::FakeRunner runner;

  CHECK(cli({"scan", config, dir / "empty.txt"}, &runner).code == 2);

  auto text = slurp(config);
  spit(dir / "depscan-scout.ini", text + "\n");
  {
    auto ini = text;
    ini.replace(ini.find("[run]"), 5, "[run]\nconfigurations = trivy, depscan+scout-sbom");
    spit(dir / "depscan-scout.ini", ini);
  }
  const auto bad = cli({"scan", dir / "depscan-scout.ini", dir / "two.txt"}, &runner);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("scout produces spdx") != std::string::npos);
  CHECK(runner.launches == 0);

  const auto cache = dir / "cache";
  const auto first = cli({"--quiet", "--cache-dir", cache, "scan", config, dir / "two.txt"}, &runner);
  CHECK(first.code == 0);
  CHECK(first.out == "56 done, 0 skipped (cached), 0 failed\n");
  const int launched = runner.launches;
  CHECK(launched > 0);

  const auto second = cli({"--cache-dir", cache, "scan", config, dir / "two.txt", "--normalize-to", dir / "records"},
                          &runner);
  INFO(second.err);
  CHECK(second.code == 0);
  CHECK(second.out.find("0 done, 56 skipped (cached), 0 failed\n") != std::string::npos);
  CHECK(second.out.find("SKIPPED_CACHED trivy " + testing::image(0)) != std::string::npos);
  CHECK(runner.launches == launched);
  CHECK(std::filesystem::exists(dir / "records/trivy.jsonl"));
  CHECK(std::filesystem::exists(dir / "records/osv+scout-sbom.jsonl"));

  // The environment variable wins over the flag.
  ::setenv("VEXMATCH_CACHE", cache.c_str(), 1);
  const auto via_env = cli({"--quiet", "--cache-dir", dir / "elsewhere", "scan", config, dir / "two.txt"}, &runner);
  ::unsetenv("VEXMATCH_CACHE");
  CHECK(via_env.out == "0 done, 56 skipped (cached), 0 failed\n");
  CHECK_FALSE(std::filesystem::exists(dir / "elsewhere"));

  const auto real = cli({"--quiet", "--cache-dir", dir / "real", "scan", config, dir / "two.txt"});
  CHECK(real.code == 1);
  CHECK(real.out.find(" failed\n") != std::string::npos);
}
