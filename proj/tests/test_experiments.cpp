#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "genbound/bounds.hpp"
#include "genbound/complexity.hpp"
#include "genbound/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace genbound;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = "/tmp/genbound_test_" + name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& param(const ResultRow& row, const std::string& key) {
  for (const auto& [k, v] : row.params)
    if (k == key) return v;
  throw std::runtime_error("row is missing parameter '" + key + "'");
}

void check_rows_equal(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].experiment == b[i].experiment);
    CHECK(a[i].params == b[i].params);
    CHECK(a[i].measured == b[i].measured);
    CHECK(a[i].theoretical == b[i].theoretical);
    CHECK(a[i].pass == b[i].pass);
    CHECK(a[i].runtime_ms == b[i].runtime_ms);
  }
}

ExperimentConfig bounds_demo_config() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::bounds_eval;
  cfg.grid.emplace_back("r_w", std::vector<std::string>{"1", "2"});
  cfg.grid.emplace_back("eps", std::vector<std::string>{"0.5", "1"});
  cfg.seeds = {11, 22};
  return cfg;
}

}  // namespace

TEST_CASE("experiment and format names round trip") {
  const ExperimentKind kinds[] = {
      ExperimentKind::bounds_eval,     ExperimentKind::covering_verify,
      ExperimentKind::maurey_verify,   ExperimentKind::rademacher_verify,
      ExperimentKind::decay_study,     ExperimentKind::compare_trauger,
      ExperimentKind::gap_study,
  };
  for (ExperimentKind kind : kinds) CHECK(parse_experiment(experiment_name(kind)) == kind);
  CHECK_THROWS_AS(parse_experiment("bogus"), ConfigError);
  CHECK_THROWS_AS(parse_experiment(""), ConfigError);

  CHECK(parse_format("csv") == OutputFormat::csv);
  CHECK(parse_format("json") == OutputFormat::json);
  CHECK(format_name(OutputFormat::csv) == std::string("csv"));
  CHECK(format_name(OutputFormat::json) == std::string("json"));
  CHECK_THROWS_AS(parse_format("yaml"), ConfigError);
}

TEST_CASE("config files parse reserved keys, comments and grid axes in order") {
  const std::string path = write_temp("parse.cfg",
                                      "# demo config\n"
                                      "experiment = bounds_eval\n"
                                      "\n"
                                      "  r_w = 1, 2,4   # trailing comment\n"
                                      "eps=0.5\n"
                                      "seeds = 3, 17\n"
                                      "format = json\n"
                                      "timings = on\n"
                                      "out = somewhere.json\n");
  const ExperimentConfig cfg = load_config(path, ExperimentKind::bounds_eval);
  CHECK(cfg.experiment == ExperimentKind::bounds_eval);
  REQUIRE(cfg.grid.size() == 2);
  CHECK(cfg.grid[0].first == "r_w");
  CHECK(cfg.grid[0].second == std::vector<std::string>{"1", "2", "4"});
  CHECK(cfg.grid[1].first == "eps");
  CHECK(cfg.grid[1].second == std::vector<std::string>{"0.5"});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 17});
  CHECK(cfg.format == OutputFormat::json);
  CHECK(cfg.timings);
  CHECK(cfg.output_path == "somewhere.json");
  std::remove(path.c_str());
}

TEST_CASE("config files reject malformed or contradictory input") {
  CHECK_THROWS_AS(load_config("/nonexistent/nowhere.cfg", ExperimentKind::bounds_eval), IoError);

  const std::string mismatch = write_temp("mismatch.cfg", "experiment = maurey_verify\n");
  CHECK_THROWS_AS(load_config(mismatch, ExperimentKind::bounds_eval), ConfigError);

  const std::string no_eq = write_temp("noeq.cfg", "just a line\n");
  CHECK_THROWS_AS(load_config(no_eq, ExperimentKind::bounds_eval), ConfigError);

  const std::string empty_key = write_temp("emptykey.cfg", " = 4\n");
  CHECK_THROWS_AS(load_config(empty_key, ExperimentKind::bounds_eval), ConfigError);

  const std::string bad_timings = write_temp("badtimings.cfg", "timings = sometimes\n");
  CHECK_THROWS_AS(load_config(bad_timings, ExperimentKind::bounds_eval), ConfigError);

  const std::string dup = write_temp("dup.cfg", "eps = 1\neps = 2\n");
  CHECK_THROWS_AS(load_config(dup, ExperimentKind::bounds_eval), ConfigError);

  const std::string bad_seed = write_temp("badseed.cfg", "seeds = 1, x\n");
  CHECK_THROWS_AS(load_config(bad_seed, ExperimentKind::bounds_eval), ConfigError);

  const std::string bad_format = write_temp("badformat.cfg", "format = yaml\n");
  CHECK_THROWS_AS(load_config(bad_format, ExperimentKind::bounds_eval), ConfigError);

  for (const std::string& p : {mismatch, no_eq, empty_key, bad_timings, dup, bad_seed, bad_format})
    std::remove(p.c_str());
}

TEST_CASE("run validates the grid against the experiment schema") {
  ExperimentConfig cfg = bounds_demo_config();
  cfg.grid.emplace_back("bogus", std::vector<std::string>{"1"});
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg = bounds_demo_config();
  cfg.grid.clear();
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg = bounds_demo_config();
  cfg.seeds.clear();
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg = bounds_demo_config();
  cfg.grid.pop_back();  // drop eps, which has no default
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg = bounds_demo_config();
  cfg.grid[0].second.push_back("");
  CHECK_THROWS_AS(run(cfg), ConfigError);

  cfg = bounds_demo_config();
  cfg.grid[1].second = {"not_a_number"};
  CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("bounds_eval rows match direct evaluator calls, ordered grid-major") {
  const std::vector<ResultRow> rows = run(bounds_demo_config());
  REQUIRE(rows.size() == 8);
  CHECK(all_pass(rows));

  // first config axis varies slowest, seed fastest
  const char* expect[8][3] = {
      {"1", "0.5", "11"}, {"1", "0.5", "22"}, {"1", "1", "11"}, {"1", "1", "22"},
      {"2", "0.5", "11"}, {"2", "0.5", "22"}, {"2", "1", "11"}, {"2", "1", "22"},
  };
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(rows[i].experiment == "bounds_eval");
    CHECK(param(rows[i], "r_w") == expect[i][0]);
    CHECK(param(rows[i], "eps") == expect[i][1]);
    CHECK(param(rows[i], "seed") == expect[i][2]);
    CHECK(param(rows[i], "bound") == "volumetric");
    CHECK(rows[i].measured == rows[i].theoretical);
    CHECK(rows[i].runtime_ms == 0.0);  // timings off
  }

  // column order: schema keys, then seed, then slack
  const std::vector<std::string> keys = {"bound", "b_x", "b_w", "r_w", "d",
                                         "k",     "eps", "seed", "slack"};
  REQUIRE(rows[0].params.size() == keys.size());
  for (std::size_t c = 0; c < keys.size(); ++c) CHECK(rows[0].params[c].first == keys[c]);

  BoundQuery q;
  q.r_w = 1;
  q.eps = 0.5;
  CHECK(rows[0].measured == volumetric_log_cover(q).log_cover);
  q.r_w = 2;
  q.eps = 1.0;
  CHECK(rows[7].measured == volumetric_log_cover(q).log_cover);
}

TEST_CASE("csv and json emission: exact header, empty tables") {
  const std::vector<ResultRow> rows = run(bounds_demo_config());
  const std::string csv = emit_string(rows, OutputFormat::csv);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "experiment,bound,b_x,b_w,r_w,d,k,eps,seed,slack,measured,theoretical,pass,runtime_ms");

  CHECK(emit_string({}, OutputFormat::csv) == "experiment,measured,theoretical,pass,runtime_ms\n");
  CHECK(emit_string({}, OutputFormat::json) == "[]\n");
  CHECK(parse_results(emit_string({}, OutputFormat::csv), OutputFormat::csv).empty());
  CHECK(parse_results(emit_string({}, OutputFormat::json), OutputFormat::json).empty());

  CHECK_THROWS_AS(parse_results("bogus\n1,2\n", OutputFormat::csv), IoError);
  CHECK_THROWS_AS(parse_results("{\"not\": \"an array\"}", OutputFormat::json), IoError);
}

TEST_CASE("emission round trips preserve every field bit-exactly") {
  const std::vector<ResultRow> rows = run(bounds_demo_config());
  check_rows_equal(rows, parse_results(emit_string(rows, OutputFormat::csv), OutputFormat::csv));
  check_rows_equal(rows, parse_results(emit_string(rows, OutputFormat::json), OutputFormat::json));

  // single-row json document
  const std::vector<ResultRow> one(rows.begin(), rows.begin() + 1);
  check_rows_equal(one, parse_results(emit_string(one, OutputFormat::json), OutputFormat::json));

  // emit-to-file matches emit-to-string byte for byte
  const std::string path = "/tmp/genbound_test_roundtrip.json";
  emit(rows, OutputFormat::json, path);
  CHECK(read_file(path) == emit_string(rows, OutputFormat::json));
  std::remove(path.c_str());
}

TEST_CASE("doubles print in a form that parses back to the identical value") {
  const double values[] = {0.1,
                           1.0 / 3.0,
                           1e-300,
                           1e300,
                           1.7976931348623157e308,
                           4.9406564584124654e-324,
                           0.0,
                           -7.25,
                           123456.789e-3};
  for (double v : values) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("maurey_verify rows pass and pass flags recompute from the row alone") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::maurey_verify;
  cfg.grid.emplace_back("decomposition", std::vector<std::string>{"frobenius", "col21"});
  cfg.grid.emplace_back("d", std::vector<std::string>{"3"});
  cfg.grid.emplace_back("k", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("t", std::vector<std::string>{"1", "8"});
  cfg.seeds = {5, 6};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 8);
  CHECK(all_pass(rows));
  for (const ResultRow& row : rows) {
    const double slack = std::strtod(param(row, "slack").c_str(), nullptr);
    CHECK(slack == 1e-9);
    CHECK(row.pass == (row.measured <= row.theoretical + slack));
    CHECK(row.measured >= 0.0);
  }
}

TEST_CASE("covering_verify rows certify dominance and reject unknown classes") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::covering_verify;
  cfg.grid.emplace_back("class", std::vector<std::string>{"frobenius_rank"});
  cfg.grid.emplace_back("d", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("k", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("eps", std::vector<std::string>{"0.5"});
  cfg.grid.emplace_back("n_matrices", std::vector<std::string>{"40"});
  cfg.grid.emplace_back("n_inputs", std::vector<std::string>{"10"});
  cfg.seeds = {1, 2};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(all_pass(rows));
  for (const ResultRow& row : rows) CHECK(row.measured <= row.theoretical);

  cfg.grid[0].second = {"mystery_class"};
  CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("rademacher_verify rows carry the matching closed-form budget") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::rademacher_verify;
  cfg.grid.emplace_back("constraint", std::vector<std::string>{"entrywise11"});
  cfg.grid.emplace_back("T", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("d", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("n", std::vector<std::string>{"4"});
  cfg.grid.emplace_back("draws", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("restarts", std::vector<std::string>{"1"});
  cfg.seeds = {9};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].pass);
  CHECK(rows[0].measured >= 0.0);
  // caps and prefactor are all 1, one head: the budget is the closed form itself
  CHECK(rows[0].theoretical == attention_bound_entrywise11(1.0, 1.0, 2, 1.0, 4.0));
}

TEST_CASE("decay_study appends slope and fit-quality summary rows") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::decay_study;
  cfg.grid.emplace_back("target", std::vector<std::string>{"main2_n"});
  cfg.grid.emplace_back("n", std::vector<std::string>{"100", "1000", "10000", "100000"});
  cfg.seeds = {0};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows[i].params.front().first == "stat");
    CHECK(param(rows[i], "stat") == "value");
  }
  const ResultRow& summary = rows.back();
  CHECK(param(summary, "stat") == "slope_dev");
  CHECK(param(summary, "n") == "0");
  CHECK(summary.theoretical == 1e-3);
  CHECK(summary.measured < 1e-3);  // the bound scales exactly as 1/sqrt(n)
  CHECK(summary.pass);

  ExperimentConfig fit;
  fit.experiment = ExperimentKind::decay_study;
  fit.grid.emplace_back("target", std::vector<std::string>{"main1_rw"});
  fit.grid.emplace_back("r_w", std::vector<std::string>{"16", "32", "64", "128", "256", "512",
                                                        "1024", "2048", "4096"});
  fit.grid.emplace_back("n", std::vector<std::string>{"10000"});
  fit.seeds = {0};
  const std::vector<ResultRow> fit_rows = run(fit);
  REQUIRE(fit_rows.size() == 10);
  const ResultRow& fit_summary = fit_rows.back();
  CHECK(param(fit_summary, "stat") == "fit_residual");
  CHECK(param(fit_summary, "r_w") == "0");
  CHECK(fit_summary.theoretical == 0.05);
  CHECK(fit_summary.measured ==
        doctest::Approx(0.022655877565925502).epsilon(1e-9));  // c1 + c2 ln(r_w) fit
  CHECK(fit_summary.pass);
}

TEST_CASE("compare_trauger splits series rows and appends slope brackets") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::compare_trauger;
  cfg.grid.emplace_back("n", std::vector<std::string>{"1000", "10000", "100000"});
  cfg.seeds = {7};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 9);
  CHECK(all_pass(rows));

  const char* expect_stat[6] = {"ours", "trauger", "ours", "trauger", "ours", "trauger"};
  const char* expect_n[6] = {"1000", "1000", "10000", "10000", "100000", "100000"};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(param(rows[i], "stat") == expect_stat[i]);
    CHECK(param(rows[i], "n") == expect_n[i]);
    CHECK(rows[i].measured == rows[i].theoretical);  // reporting rows self-pass
  }
  // reporting rows reproduce the two closed forms at d = 16
  CHECK(rows[0].measured == attention_bound_entrywise11(1.0, 1.0, 16, 1.0, 1000.0));
  CHECK(rows[1].measured == trauger_expression(1.0, 1.0, 1.0, 16, 1000.0));

  CHECK(param(rows[6], "stat") == "slope_lo");
  CHECK(param(rows[7], "stat") == "slope_hi");
  CHECK(param(rows[8], "stat") == "ratio_trend");
  for (std::size_t i = 6; i < 9; ++i) CHECK(param(rows[i], "n") == "0");
  // fitted comparator slope sits strictly inside (-0.5, -0.3)
  CHECK(rows[6].measured < 0.0);
  CHECK(rows[7].measured < 0.0);
  // our bound gains on the comparator from the smallest to the largest n
  CHECK(rows[8].measured < 1.0);
  CHECK(rows[8].theoretical == 1.0);
}

TEST_CASE("gap_study rows compose the uniform deviation bound") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::gap_study;
  cfg.grid.emplace_back("T", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("d", std::vector<std::string>{"2"});
  cfg.grid.emplace_back("n", std::vector<std::string>{"8"});
  cfg.grid.emplace_back("holdout", std::vector<std::string>{"60"});
  cfg.grid.emplace_back("r_w", std::vector<std::string>{"1"});
  cfg.seeds = {4};
  const std::vector<ResultRow> rows = run(cfg);
  REQUIRE(rows.size() == 1);
  const ResultRow& row = rows[0];
  CHECK(row.measured >= 0.0);  // |population - train|
  const double rb = attention_bound_basis11(1.0, 1.0, 1, 1.0, 8.0);
  CHECK(row.theoretical == gap_bound(rb, 1.0, 0.1, 8.0));
  const double slack = std::strtod(param(row, "slack").c_str(), nullptr);
  CHECK(slack >= 0.0);  // three proxy standard errors
  CHECK(row.pass == (row.measured <= row.theoretical + slack));
}

TEST_CASE("reruns are byte-identical, including written files") {
  ExperimentConfig cfg = bounds_demo_config();
  cfg.output_path = "/tmp/genbound_test_rerun_a.csv";
  const std::vector<ResultRow> first = run(cfg);
  cfg.output_path = "/tmp/genbound_test_rerun_b.csv";
  const std::vector<ResultRow> second = run(cfg);
  check_rows_equal(first, second);
  CHECK(read_file("/tmp/genbound_test_rerun_a.csv") == read_file("/tmp/genbound_test_rerun_b.csv"));
  std::remove("/tmp/genbound_test_rerun_a.csv");
  std::remove("/tmp/genbound_test_rerun_b.csv");

  // a run with stochastic internals is still deterministic for fixed seeds
  ExperimentConfig mc;
  mc.experiment = ExperimentKind::rademacher_verify;
  mc.grid.emplace_back("constraint", std::vector<std::string>{"entrywise11"});
  mc.grid.emplace_back("T", std::vector<std::string>{"2"});
  mc.grid.emplace_back("d", std::vector<std::string>{"2"});
  mc.grid.emplace_back("n", std::vector<std::string>{"4"});
  mc.grid.emplace_back("draws", std::vector<std::string>{"2"});
  mc.grid.emplace_back("restarts", std::vector<std::string>{"1"});
  mc.seeds = {3, 4};
  CHECK(emit_string(run(mc), OutputFormat::csv) == emit_string(run(mc), OutputFormat::csv));

  // timings=on reports a positive runtime and is the one rerun-varying field
  mc.timings = true;
  const std::vector<ResultRow> timed = run(mc);
  CHECK(timed[0].runtime_ms > 0.0);
}
