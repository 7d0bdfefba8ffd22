#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/csv.hpp"
#include "cli/dataset.hpp"
#include "fewmeta/errors.hpp"

using namespace fewmeta;
using namespace fewmeta::cli;

namespace {

std::vector<MetaDataset> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

const std::string kHeader = std::string(kDatasetHeader) + "\n";

}  // namespace

TEST_CASE("dataset parsing") {
  const auto ds = parse(kHeader + "A16-38,S1,15,100,10,100\nB01,S1,3,20,4,21\nA16-38,S2,20,150,12,148\n");
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].id == "A16-38");
  CHECK(ds[0].k() == 2);
  CHECK(ds[0].studies[1] == TwoByTwoTable{20, 150, 12, 148});
  CHECK(ds[1].id == "B01");

  CHECK(parse(kHeader).empty());
  CHECK(parse("\xEF\xBB\xBF" + kHeader + "A,S,1,2,1,2\r\n").size() == 1);
}

TEST_CASE("dataset errors name the line") {
  try {
    parse(kHeader + "A,S1,1,10,1,10\nX,S1,101,100,10,100\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("meta,study,a,b,c,d\n"), ParseError);
  CHECK_THROWS_AS(parse(kHeader + "A,S1,1,10,1\n"), ParseError);
  CHECK_THROWS_AS(parse(kHeader + "A,S1,1.5,10,1,10\n"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, u(rng) / 10);
    const double back = parse_number(format_number(v));
    CHECK(std::abs(back - v) <= 1e-11 * std::abs(v));
    CHECK(format_number(back) == format_number(v));
  }
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(std::isnan(parse_number("NA")));
  CHECK(std::isinf(parse_number(format_number(-INFINITY))));
  CHECK(format_rate(0.95) == "0.950000");
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("analysis: coincidence at k = 2 and failures in-row") {
  const auto ds = parse(kHeader + "A,S1,15,100,10,100\nA,S2,25,100,12,100\n");
  const std::vector<std::string> ids{"NN-DL/WALD", "NN-REML/WALD", "NN-EB/WALD", "PN-PL/NORMAL"};
  const auto rows = analyze(ds, Measure::LogOddsRatio, ids, 0.95);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].outcome.estimate == doctest::Approx(rows[0].outcome.estimate).epsilon(1e-8));
  CHECK(rows[2].outcome.estimate == doctest::Approx(rows[0].outcome.estimate).epsilon(1e-8));
  REQUIRE(rows[1].ratio_vs_nn_dl.has_value());
  CHECK(*rows[1].ratio_vs_nn_dl == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_FALSE(rows[3].outcome.converged);
  CHECK_FALSE(rows[3].outcome.error.empty());

  const auto csv = read_csv(analysis_csv(rows));
  CHECK(csv.size() == 5);
  CHECK(csv[0].size() == split_csv_line(kAnalysisHeader).size());
  for (const auto& r : csv) CHECK(r.size() == csv[0].size());
  CHECK(parse_number(csv[1][5]) == doctest::Approx(rows[0].outcome.estimate).epsilon(1e-11));

  const auto rr = analyze(ds, Measure::LogRiskRatio, ids, 0.95);
  CHECK(rr[0].measure == Measure::LogRiskRatio);
  CHECK(rr[3].outcome.converged);
}

TEST_CASE("analysis is invariant under row order") {
  const std::string a = kHeader + "M,S1,15,100,10,100\nM,S2,25,100,12,100\nM,S3,30,300,40,310\nM,S4,0,50,3,50\n";
  const std::string b = kHeader + "M,S3,30,300,40,310\nM,S4,0,50,3,50\nM,S2,25,100,12,100\nM,S1,15,100,10,100\n";
  const auto ids = all_method_ids();
  for (auto measure : {Measure::LogOddsRatio, Measure::LogRiskRatio}) {
    const auto ra = analyze(parse(a), measure, ids, 0.95);
    const auto rb = analyze(parse(b), measure, ids, 0.95);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CAPTURE(ra[i].method);
      CHECK(ra[i].outcome.converged == rb[i].outcome.converged);
      if (!ra[i].outcome.converged) continue;
      CHECK(std::abs(ra[i].outcome.estimate - rb[i].outcome.estimate) < 1e-5);
      CHECK(std::abs(ra[i].outcome.lower - rb[i].outcome.lower) < 1e-4);
      CHECK(std::abs(ra[i].outcome.upper - rb[i].outcome.upper) < 1e-4);
    }
  }
}

TEST_CASE("run configuration") {
  const std::string ok = R"({"measures":["OR","RR"],"designs":["EQUAL"],"n":[100],"k":[2,3],
    "p0":[0.7],"i2":[0,0.5],"methods":["NN-DL/WALD"],"reps":3,"seed":11})";
  const auto c = parse_run_config(ok);
  CHECK(c.reps == 3);
  CHECK(c.seed == 11);
  const auto grid = expand_grid(c);
  CHECK(grid.size() == 8);
  CHECK(grid.front().measure == Measure::LogOddsRatio);
  CHECK(grid.back().measure == Measure::LogRiskRatio);

  CHECK_THROWS_AS(parse_run_config(R"({"measures":[],"designs":["EQUAL"],"n":[100],"k":[2],"p0":[0.7],"i2":[0],"methods":["NN-DL/WALD"],"seed":1})"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"measures":["OR"],"designs":["EQUAL"],"n":[100],"k":[2],"p0":[0.7],"i2":[0],"methods":["NN-DL/WALD"]})"), ParseError);
  CHECK_THROWS_AS(parse_run_config(R"({"measures":["XX"],"designs":["EQUAL"],"n":[100],"k":[2],"p0":[0.7],"i2":[0],"methods":["NN-DL/WALD"],"seed":1})"), ParseError);
  CHECK_THROWS_AS(parse_run_config("{not json"), ParseError);
}

TEST_CASE("simulation output") {
  RunConfig c;
  c.measures = {Measure::LogOddsRatio};
  c.designs = {Design::Equal, Design::OneSmall};
  c.n = {100, 25};
  c.k = {2};
  c.p0 = {0.5};
  c.i2 = {0.0};
  c.methods = {"NN-DL/WALD"};
  c.reps = 1;
  c.seed = 3;
  const auto out = simulate(c, 1);
  CHECK(out.warnings.size() == 1);  // ONE_SMALL with n = 25
  const auto rows = read_csv(out.csv);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == split_csv_line(kSimulationHeader));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double cov = parse_number(rows[i][9]);
    CHECK((cov == 0.0 || cov == 1.0));
  }
}

TEST_CASE("tau table") {
  const auto cells = tau_table();
  CHECK(cells.size() == 72);
  const auto rows = read_csv(tau_table_csv(cells));
  CHECK(rows.size() == 73);
  CHECK(parse_measure("or") == Measure::LogOddsRatio);
  CHECK(parse_design("one_large") == Design::OneLarge);
}
