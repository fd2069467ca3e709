// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "opal/experiment.hpp"

using namespace opal;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.grid_n = 16;
  cfg.budgets = {2, 4, 8};
  cfg.trials = 2;
  cfg.test_size = 12;
  cfg.kl_truncation = 64;
  cfg.seed = 123;
  return cfg;
}

double mean_of(const std::vector<ResultRow>& rows, const std::string& estimator, long n,
               const std::string& metric) {
  double acc = 0;
  long count = 0;
  for (const ResultRow& r : rows)
    if (r.estimator == estimator && r.n == n && r.metric == metric) {
      acc += r.value;
      ++count;
    }
  REQUIRE(count > 0);
  return acc / static_cast<double>(count);
}

} // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  ExperimentConfig bad = cfg;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.budgets = {8, 4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.budgets = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.grid_n = 100;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.grid_n = 512;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.equation = "wave";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.estimators = {"mystery"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.oracle = "exact";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.gamma = 0.9; // 2 gamma <= d
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("convergence run shape and active error decay") {
  const ExperimentConfig cfg = tiny_config();
  const RunOutput out = run_convergence_experiment(cfg);

  // budgets x trials x estimators x 2 metrics rows
  CHECK(out.rows.size() == 3 * 2 * 2 * 2);
  CHECK(out.manifest["accounting_ok"].get<bool>());
  for (const auto& entry : out.manifest["oracle_call_accounting"])
    CHECK(entry["ok"].get<bool>());

  // Active error decreases with the budget (tail monotonicity).
  const double e2 = mean_of(out.rows, "active", 2, "relative-mse");
  const double e4 = mean_of(out.rows, "active", 4, "relative-mse");
  const double e8 = mean_of(out.rows, "active", 8, "relative-mse");
  CHECK(e4 < e2);
  CHECK(e8 < e4);
}

TEST_CASE("runs are byte-identical for identical seeds") {
  const ExperimentConfig cfg = tiny_config();
  const RunOutput a = run_convergence_experiment(cfg);
  const RunOutput b = run_convergence_experiment(cfg);
  CHECK(results_csv(a.rows) == results_csv(b.rows));
  CHECK(a.manifest.dump() == b.manifest.dump());

  ExperimentConfig other = cfg;
  other.seed = 124;
  const RunOutput c = run_convergence_experiment(other);
  CHECK(results_csv(a.rows) != results_csv(c.rows));
}

TEST_CASE("heat experiment runs at the reference settings") {
  ExperimentConfig cfg = tiny_config();
  cfg.equation = "heat";
  cfg.alpha = 1;
  cfg.gamma = 1.5;
  cfg.budgets = {2, 4};
  cfg.oracle = "spectral";
  const RunOutput out = run_convergence_experiment(cfg);
  CHECK(out.rows.size() == 2 * 2 * 2 * 2);
  for (const ResultRow& r : out.rows)
    CHECK(std::isfinite(r.value));
}

TEST_CASE("bound-only gamma sweep slopes track the theory") {
  ExperimentConfig cfg;
  cfg.kernel = "torus";
  cfg.dim = 2;
  cfg.alpha = 100;
  cfg.beta = 1;
  cfg.budgets = {16, 32, 64, 128, 256, 512, 1024};
  cfg.epsilon = 0;
  cfg.op_norm = 1;
  const std::vector<double> gammas = {1.5, 2.0, 2.5};
  const RunOutput out = run_gamma_sweep(cfg, gammas, true);

  std::vector<double> slopes;
  for (const ResultRow& r : out.rows)
    if (r.metric == "loglog-slope")
      slopes.push_back(r.value);
  REQUIRE(slopes.size() == 3);
  // Slopes get steeper as gamma grows and sit near -(2 gamma / d - 1).
  CHECK(slopes[1] < slopes[0]);
  CHECK(slopes[2] < slopes[1]);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(slopes[i] - (-(gammas[i] - 1.0))) < 0.15);
}

TEST_CASE("single-gamma sweep degenerates to the convergence experiment") {
  ExperimentConfig cfg = tiny_config();
  cfg.budgets = {2, 4, 8};
  const RunOutput sweep = run_gamma_sweep(cfg, {cfg.gamma}, false);
  const RunOutput conv = run_convergence_experiment(cfg);
  long sweep_data_rows = 0;
  for (const ResultRow& r : sweep.rows)
    if (r.metric == "relative-mse" || r.metric == "absolute-risk")
      ++sweep_data_rows;
  CHECK(sweep_data_rows == static_cast<long>(conv.rows.size()));
}

TEST_CASE("lower-bound demo probabilities and rows") {
  LowerBoundConfig cfg;
  cfg.m = 1;
  cfg.n = 1;
  cfg.spectrum = 16;
  cfg.trials = 8;
  cfg.event_trials = 2000;
  cfg.test_size = 200;
  cfg.grid_n = 64;
  cfg.seed = 5;
  CHECK(cfg.p() == doctest::Approx(0.5));
  const RunOutput out = run_lower_bound_demo(cfg);

  double predicted = -1, freq = -1, freq_se = 0, bound = -1;
  for (const ResultRow& r : out.rows) {
    if (r.metric == "event-probability")
      predicted = r.value;
    if (r.metric == "event-frequency") {
      freq = r.value;
      freq_se = r.std_error;
    }
    if (r.metric == "lower-bound-value")
      bound = r.value;
  }
  CHECK(predicted == doctest::Approx(0.5));
  CHECK(std::abs(freq - predicted) <= 3.0 * freq_se);
  const EigenSystem sys = brownian_eigensystem(16);
  CHECK(bound == doctest::Approx(0.5 * sys.head_sum(1)));
  CHECK(out.manifest["accounting_ok"].get<bool>());

  LowerBoundConfig bad = cfg;
  bad.m = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("results csv layout") {
  std::vector<ResultRow> rows{{"poisson", "dirichlet-box", 2.0, 4, 0, "active", "relative-mse",
                               0.125, 0.002, 42}};
  const std::string csv = results_csv(rows);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "experiment,kernel,gamma,n,trial,estimator,metric,value,stderr,seed");
  std::getline(ss, line);
  CHECK(line == "poisson,dirichlet-box,2,4,0,active,relative-mse,0.125,0.002,42");
}

TEST_CASE("aggregation means, stderr, and log columns") {
  std::stringstream in("experiment,n,estimator,value\n"
                       "e,4,a,1.0\n"
                       "e,4,a,3.0\n"
                       "e,8,a,0.5\n");
  const std::string out = emit_plot_data(in, {"estimator", "n"});
  std::stringstream ss(out);
  std::string header, row1, row2;
  std::getline(ss, header);
  std::getline(ss, row1);
  std::getline(ss, row2);
  CHECK(header == "estimator,n,count,mean,stderr,log10_n,log10_mean");
  CHECK(row1 == "a,4,2,2,1,0.602059991328,0.301029995664");
  CHECK(row2 == "a,8,1,0.5,0,0.903089986992,-0.301029995664");

  // Two identical rows give stderr 0.
  std::stringstream twice("n,value\n2,7\n2,7\n");
  const std::string t = emit_plot_data(twice, {"n"});
  CHECK(t.find("2,2,7,0,") != std::string::npos);

  // Synthetic n^-3 data leaves perfectly linear log-log columns.
  std::stringstream cubic;
  cubic << "n,value\n";
  for (int n : {2, 4, 8, 16})
    cubic << n << ',' << fmt_g(8.0 / (static_cast<double>(n) * n * n)) << '\n';
  std::stringstream agg(emit_plot_data(cubic, {"n"}));
  std::string line;
  std::getline(agg, line);
  std::vector<std::array<double, 2>> pts;
  while (std::getline(agg, line)) {
    const auto c1 = line.rfind(',');
    const std::string tail_s = line.substr(c1 + 1);
    const auto c0 = line.rfind(',', c1 - 1);
    pts.push_back({std::stod(line.substr(c0 + 1, c1 - c0 - 1)), std::stod(tail_s)});
  }
  REQUIRE(pts.size() == 4);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double slope = (pts[i][1] - pts[0][1]) / (pts[i][0] - pts[0][0]);
    CHECK(slope == doctest::Approx(-3.0).epsilon(1e-9));
  }

  std::stringstream empty("");
  CHECK_THROWS_AS(emit_plot_data(empty, {"n"}), ConfigError);
  std::stringstream no_rows("n,value\n");
  CHECK_THROWS_AS(emit_plot_data(no_rows, {"n"}), ConfigError);
  std::stringstream missing("a,b\n1,2\n");
  CHECK_THROWS_AS(emit_plot_data(missing, {"n"}), ConfigError);
}

TEST_CASE("write_run_output produces both files") {
  const ExperimentConfig cfg = [] {
    ExperimentConfig c = tiny_config();
    c.budgets = {2};
    c.trials = 1;
    c.test_size = 4;
    return c;
  }();
  const RunOutput out = run_convergence_experiment(cfg);
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "opal_test_run_output";
  std::filesystem::remove_all(dir);
  write_run_output(out, dir);
  CHECK(std::filesystem::exists(dir / "results.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}
