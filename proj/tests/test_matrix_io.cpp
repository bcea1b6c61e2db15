#include "doctest.h"

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vexmatch/error.hpp"
#include "vexmatch/matrix_io.hpp"
#include "vexmatch/similarity.hpp"

using namespace vexmatch;

namespace {

std::string render(const SimilarityMatrix &m, OutputFormat f) {
  std::ostringstream out;
  write_matrix(out, m, f);
  return out.str();
}

}  // namespace

TEST_CASE("csv layout") {
  const SimilarityMatrix m({"grype", "trivy"}, {1, 0.71, 0.71, 1});
  CHECK(render(m, OutputFormat::kCsv) == ",grype,trivy\ngrype,1.0000,0.7100\ntrivy,0.7100,1.0000\n");
}

TEST_CASE("empty-union cells are flagged") {
  const auto m = pairwise_matrix({RecordSet("a"), RecordSet("b"), testing::to_set("c", {1})});
  const auto csv = render(m, OutputFormat::kCsv);
  CHECK(csv.find("a,1.0000*,1.0000*,0.0000\n") != std::string::npos);
  const auto j = nlohmann::json::parse(render(m, OutputFormat::kJson));
  CHECK(j["labels"] == nlohmann::json::array({"a", "b", "c"}));
  CHECK(j["values"][0][2] == 0.0);
  CHECK(j["empty_union"] == nlohmann::json::parse("[[0,0],[0,1],[1,1]]"));
  const auto md = render(m, OutputFormat::kMarkdown);
  CHECK(md.find("1.0000*") != std::string::npos);
  CHECK(md.find("|---") != std::string::npos);

  const auto back = read_matrix(csv);
  CHECK(back.empty_union(0, 1));
  CHECK_FALSE(back.empty_union(0, 2));
}

TEST_CASE("csv and json round-trip at display precision") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RecordSet> sets;
    const std::size_t n = 1 + rng() % 5;
    for (std::size_t i = 0; i < n; ++i) {
      sets.push_back(testing::to_set("tool " + std::to_string(i) + (i % 2 ? ",x" : ""), testing::random_members(rng, 15)));
    }
    const auto m = pairwise_matrix(sets);
    for (auto f : {OutputFormat::kCsv, OutputFormat::kJson}) {
      const auto back = read_matrix(render(m, f));
      REQUIRE(back.labels() == m.labels());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(std::abs(back.at(i, j) - m.at(i, j)) <= 5e-5);
          CHECK(back.empty_union(i, j) == m.empty_union(i, j));
        }
      }
    }
  }
}

TEST_CASE("read_matrix rejects bad grids") {
  CHECK_THROWS_AS(read_matrix(",a,b\na,1,0.5\nb,0.4,1\n"), ValidationError);
  CHECK_THROWS_AS(read_matrix(",a,b\nb,1,0.5\na,0.5,1\n"), ParseError);
  CHECK_THROWS_AS(read_matrix(",a,b\na,1,x\nb,0.5,1\n"), ParseError);
  CHECK_THROWS_AS(read_matrix(",a,b\na,1,0.5\n"), ParseError);
  CHECK_THROWS_AS(read_matrix("{\"labels\": [\"a\"]}"), ParseError);
  CHECK_THROWS_AS(read_matrix(""), ParseError);
}

TEST_CASE("output format names") {
  CHECK(parse_output_format("csv") == OutputFormat::kCsv);
  CHECK(parse_output_format("md") == OutputFormat::kMarkdown);
  CHECK(parse_output_format("markdown") == OutputFormat::kMarkdown);
  CHECK_THROWS_AS(parse_output_format("xml"), ValidationError);
  CHECK(format_score(0.15625) == "0.1562");
  CHECK(format_score(1.0 / 3.0) == "0.3333");
}

TEST_CASE("tables") {
  Table t;
  t.header = {"subset", "trivy"};
  t.json_numeric = {false, true};
  t.rows = {{"complete", "80.0"}};
  std::ostringstream csv, json;
  write_table(csv, t, OutputFormat::kCsv);
  write_table(json, t, OutputFormat::kJson);
  CHECK(csv.str() == "subset,trivy\ncomplete,80.0\n");
  CHECK(nlohmann::json::parse(json.str()) == nlohmann::json::parse(R"([{"subset":"complete","trivy":80.0}])"));
}
