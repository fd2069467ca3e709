// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace opal {

namespace {

// Stream tags for seed derivation.
enum : std::uint64_t { kTest = 1, kTrain = 2, kSigns = 3, kEvent = 4, kRisk = 5, kNoise = 6 };

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t role, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return mix64(seed ^ stream_id(role, a, b));
}

bool is_pow2(long v) { return v > 0 && (v & (v - 1)) == 0; }

} // namespace

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,kernel,gamma,n,trial,estimator,metric,value,stderr,seed\n";
  for (const ResultRow& r : rows) {
    out += r.experiment;
    out += ',';
    out += r.kernel;
    out += ',';
    out += fmt_g(r.gamma);
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += r.estimator;
    out += ',';
    out += r.metric;
    out += ',';
    out += fmt_g(r.value);
    out += ',';
    out += fmt_g(r.std_error);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

void write_run_output(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "results.csv", std::ios::binary);
    if (!f)
      throw ConfigError("write_run_output: cannot open " + (dir / "results.csv").string());
    f << results_csv(out.rows);
  }
  {
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f)
      throw ConfigError("write_run_output: cannot open " + (dir / "manifest.json").string());
    f << out.manifest.dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Config validation

void ExperimentConfig::validate() const {
  if (equation != "poisson" && equation != "heat")
    throw ConfigError("config: equation must be poisson or heat");
  if (dim != 2)
    throw ConfigError("config: the PDE experiments run on d = 2");
  if (!(alpha > 0) || !(beta > 0))
    throw ConfigError("config: alpha and beta must be positive");
  if (!(2.0 * gamma > dim))
    throw ConfigError("config: trace class needs 2*gamma > d");
  if (!is_pow2(grid_n) || grid_n < 16 || grid_n > 256)
    throw ConfigError("config: grid size must be a power of two in [16, 256]");
  if (budgets.empty())
    throw ConfigError("config: empty budget list");
  long prev = 0;
  for (long b : budgets) {
    if (b <= prev)
      throw ConfigError("config: budgets must be ascending and positive");
    prev = b;
  }
  if (trials < 1)
    throw ConfigError("config: trials must be >= 1");
  if (test_size < 1)
    throw ConfigError("config: test size must be >= 1");
  if (oracle != "fd" && oracle != "spectral")
    throw ConfigError("config: oracle must be fd or spectral");
  if (epsilon < 0)
    throw ConfigError("config: epsilon must be nonnegative");
  if (noise_mode != "fixed" && noise_mode != "random")
    throw ConfigError("config: noise mode must be fixed or random");
  if (estimators.empty())
    throw ConfigError("config: no estimators requested");
  for (const std::string& e : estimators)
    if (e != "active" && e != "passive-lsq")
      throw ConfigError("config: unknown estimator " + e);
  if (equation == "heat" && (tau < 0 || steps < 1))
    throw ConfigError("config: heat needs tau >= 0 and steps >= 1");
  if (mode_cap != 0 && (mode_cap < 1 || mode_cap > grid_n - 2))
    throw ConfigError("config: mode_cap above Nyquist");
  if (!(svd_trunc_tol > 0))
    throw ConfigError("config: svd truncation tolerance must be positive");
}

void ExperimentConfig::validate_bounds_only() const {
  if (kernel != "torus" && kernel != "dirichlet-box")
    throw ConfigError("config: bound sweep kernel must be torus or dirichlet-box");
  if (dim != 1 && dim != 2)
    throw ConfigError("config: dim must be 1 or 2");
  if (!(alpha > 0) || !(beta > 0))
    throw ConfigError("config: alpha and beta must be positive");
  if (!(2.0 * gamma > dim))
    throw ConfigError("config: trace class needs 2*gamma > d");
  if (budgets.empty())
    throw ConfigError("config: empty budget list");
  long prev = 0;
  for (long b : budgets) {
    if (b <= prev)
      throw ConfigError("config: budgets must be ascending and positive");
    prev = b;
  }
  if (epsilon < 0 || op_norm < 0)
    throw ConfigError("config: epsilon and op_norm must be nonnegative");
}

std::size_t ExperimentConfig::resolved_truncation() const {
  if (kl_truncation != 0)
    return kl_truncation;
  const long max_budget = budgets.back();
  const std::size_t floor_terms = dim == 1 ? 256 : 1024;
  return std::max<std::size_t>(4 * static_cast<std::size_t>(max_budget), floor_terms);
}

int ExperimentConfig::resolved_mode_cap() const {
  return mode_cap != 0 ? mode_cap : grid_n / 2 - 1;
}

// ---------------------------------------------------------------------------
// Convergence experiment

namespace {

struct OraclePair {
  Oracle truth;  // clean operator used for scoring
  Oracle train;  // possibly epsilon-degraded oracle used for fitting
};

OraclePair build_oracles(const ExperimentConfig& cfg, const GridPtr& grid) {
  Oracle base;
  if (cfg.equation == "poisson")
    base = cfg.oracle == "fd" ? poisson_fd_oracle(grid)
                              : poisson_spectral_oracle(grid, cfg.resolved_mode_cap());
  else
    base = cfg.oracle == "fd" ? heat_fd_oracle(grid, cfg.tau, cfg.steps)
                              : heat_spectral_oracle(grid, cfg.tau, cfg.resolved_mode_cap());
  OraclePair pair{base, base};
  if (cfg.epsilon > 0) {
    const NoiseMode mode =
        cfg.noise_mode == "fixed" ? NoiseMode::FixedDirection : NoiseMode::RandomUnit;
    pair.train = noisy_oracle(base, cfg.epsilon, mode, sub_seed(cfg.seed, kNoise), grid);
  }
  return pair;
}

struct Scores {
  double rel_mean = 0, rel_se = 0;
  double abs_mean = 0, abs_se = 0;
};

Scores score_against(const RankOneOperator& est, const std::vector<FieldFunction>& tests,
                     const std::vector<FieldFunction>& truths) {
  std::vector<double> rel, abs;
  rel.reserve(tests.size());
  abs.reserve(tests.size());
  for (std::size_t s = 0; s < tests.size(); ++s) {
    const FieldFunction pred = est.apply(tests[s]);
    const FieldFunction diff{truths[s].grid, truths[s].values - pred.values};
    const double err2 = l2_norm_sq(diff);
    abs.push_back(err2);
    const double denom = l2_norm_sq(truths[s]);
    if (denom >= 1e-14)
      rel.push_back(err2 / denom);
  }
  auto summarize = [](const std::vector<double>& xs, double& mean, double& se) {
    mean = 0;
    for (double x : xs)
      mean += x;
    mean = xs.empty() ? 0.0 : mean / static_cast<double>(xs.size());
    double acc = 0;
    for (double x : xs)
      acc += (x - mean) * (x - mean);
    se = xs.size() > 1 ? std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0) /
                                   static_cast<double>(xs.size()))
                       : 0.0;
  };
  Scores s;
  summarize(rel, s.rel_mean, s.rel_se);
  summarize(abs, s.abs_mean, s.abs_se);
  return s;
}

} // namespace

RunOutput run_convergence_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const GridPtr grid = make_grid(2, cfg.grid_n, Domain::Box01);
  const std::size_t truncation = cfg.resolved_truncation();
  const std::size_t spectrum =
      std::max(truncation, static_cast<std::size_t>(cfg.budgets.back()));
  const EigenSystem sys = dirichlet_box_eigensystem(cfg.alpha, cfg.beta, cfg.gamma, 2, spectrum);
  OraclePair oracles = build_oracles(cfg, grid);
  const KlSampler sampler(sys, truncation, grid, CoefficientLaw::gaussian());

  const bool want_active =
      std::find(cfg.estimators.begin(), cfg.estimators.end(), "active") != cfg.estimators.end();
  const bool want_passive = std::find(cfg.estimators.begin(), cfg.estimators.end(),
                                      "passive-lsq") != cfg.estimators.end();

  RunOutput out;
  nlohmann::json accounting = nlohmann::json::array();
  bool accounting_ok = true;

  for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
    const long n = cfg.budgets[bi];
    if (static_cast<std::size_t>(n) > sys.count())
      throw ConfigError("config: budget exceeds the stored spectrum");
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t trial_seed = sub_seed(cfg.seed, kTest, bi, static_cast<std::uint64_t>(trial));

      std::vector<FieldFunction> tests, truths;
      tests.reserve(static_cast<std::size_t>(cfg.test_size));
      truths.reserve(static_cast<std::size_t>(cfg.test_size));
      for (int s = 0; s < cfg.test_size; ++s) {
        tests.push_back(sampler.sample(trial_seed, static_cast<std::uint64_t>(s)).field);
        truths.push_back(oracles.truth(tests.back()));
      }

      auto emit = [&](const std::string& estimator, const Scores& sc) {
        out.rows.push_back({cfg.equation, cfg.kernel, cfg.gamma, n, trial, estimator,
                            "relative-mse", sc.rel_mean, sc.rel_se, trial_seed});
        out.rows.push_back({cfg.equation, cfg.kernel, cfg.gamma, n, trial, estimator,
                            "absolute-risk", sc.abs_mean, sc.abs_se, trial_seed});
      };
      auto account = [&](const std::string& estimator, std::uint64_t used) {
        const bool ok = used == static_cast<std::uint64_t>(n);
        accounting_ok = accounting_ok && ok;
        accounting.push_back({{"budget", n},
                              {"trial", trial},
                              {"estimator", estimator},
                              {"oracle_calls", used},
                              {"expected", n},
                              {"ok", ok}});
      };

      if (want_active) {
        const std::uint64_t before = oracles.train.calls();
        const RankOneOperator est = fit_active(sys, oracles.train, static_cast<std::size_t>(n), grid);
        account("active", oracles.train.calls() - before);
        emit("active", score_against(est, tests, truths));
      }
      if (want_passive) {
        const std::uint64_t train_seed = sub_seed(cfg.seed, kTrain, bi, static_cast<std::uint64_t>(trial));
        std::vector<FieldFunction> inputs, outputs;
        inputs.reserve(static_cast<std::size_t>(n));
        outputs.reserve(static_cast<std::size_t>(n));
        const std::uint64_t before = oracles.train.calls();
        for (long i = 0; i < n; ++i) {
          inputs.push_back(sampler.sample(train_seed, static_cast<std::uint64_t>(i)).field);
          outputs.push_back(oracles.train(inputs.back()));
        }
        const RankOneOperator est = fit_passive_lsq(inputs, outputs, cfg.svd_trunc_tol);
        account("passive-lsq", oracles.train.calls() - before);
        emit("passive-lsq", score_against(est, tests, truths));
      }
    }
  }

  out.manifest = {{"command", "converge"},
                  {"config",
                   {{"equation", cfg.equation},
                    {"kernel", cfg.kernel},
                    {"alpha", cfg.alpha},
                    {"beta", cfg.beta},
                    {"gamma", cfg.gamma},
                    {"dim", cfg.dim},
                    {"grid_n", cfg.grid_n},
                    {"budgets", cfg.budgets},
                    {"trials", cfg.trials},
                    {"test_size", cfg.test_size},
                    {"oracle", cfg.oracle},
                    {"epsilon", cfg.epsilon},
                    {"noise_mode", cfg.noise_mode},
                    {"estimators", cfg.estimators},
                    {"tau", cfg.tau},
                    {"steps", cfg.steps},
                    {"svd_trunc_tol", cfg.svd_trunc_tol},
                    {"seed", cfg.seed}}},
                  {"kl_truncation", truncation},
                  {"stored_spectrum", sys.count()},
                  {"eigensystem", sys.descriptor()},
                  {"truth_oracle", oracles.truth.info().to_json()},
                  {"train_oracle", oracles.train.info().to_json()},
                  {"oracle_call_accounting", accounting},
                  {"accounting_ok", accounting_ok}};
  if (!accounting_ok)
    throw NumericalError("run_convergence_experiment: oracle-call accounting failed");
  return out;
}

// ---------------------------------------------------------------------------
// Gamma sweep

RunOutput run_gamma_sweep(const ExperimentConfig& cfg, const std::vector<double>& gammas,
                          bool bound_only) {
  if (gammas.empty())
    throw ConfigError("sweep: empty gamma list");

  RunOutput out;
  nlohmann::json per_gamma = nlohmann::json::array();

  for (double gamma : gammas) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.gamma = gamma;

    if (bound_only) {
      run_cfg.validate_bounds_only();
      const std::size_t spectrum =
          std::max<std::size_t>(static_cast<std::size_t>(run_cfg.budgets.back()), 16);
      const EigenSystem sys =
          run_cfg.kernel == "torus"
              ? torus_eigensystem(run_cfg.alpha, run_cfg.beta, gamma, run_cfg.dim, spectrum)
              : dirichlet_box_eigensystem(run_cfg.alpha, run_cfg.beta, gamma, run_cfg.dim,
                                          spectrum);
      std::vector<double> ns, values;
      for (long n : run_cfg.budgets) {
        const BoundReport b =
            upper_bound(sys, static_cast<std::size_t>(n), run_cfg.epsilon, run_cfg.op_norm);
        out.rows.push_back({"sweep", run_cfg.kernel, gamma, n, 0, "bound", "upper-bound",
                            b.total, 0.0, cfg.seed});
        ns.push_back(static_cast<double>(n));
        values.push_back(b.total);
      }
      const LineFit fit = fit_loglog_slope(ns, values);
      out.rows.push_back({"sweep", run_cfg.kernel, gamma, 0, 0, "bound", "loglog-slope",
                          fit.slope, 0.0, cfg.seed});
      out.rows.push_back({"sweep", run_cfg.kernel, gamma, 0, 0, "bound", "loglog-r2", fit.r2,
                          0.0, cfg.seed});
      per_gamma.push_back({{"gamma", gamma}, {"slope", fit.slope}, {"r2", fit.r2}});
      continue;
    }

    RunOutput conv = run_convergence_experiment(run_cfg);
    for (ResultRow& r : conv.rows)
      r.experiment = "sweep";
    // Per-estimator slope of the mean relative MSE across budgets.
    for (const std::string& estimator : run_cfg.estimators) {
      std::vector<double> ns, means;
      for (long n : run_cfg.budgets) {
        double acc = 0;
        long count = 0;
        for (const ResultRow& r : conv.rows)
          if (r.n == n && r.estimator == estimator && r.metric == "relative-mse") {
            acc += r.value;
            ++count;
          }
        if (count > 0 && acc > 0) {
          ns.push_back(static_cast<double>(n));
          means.push_back(acc / static_cast<double>(count));
        }
      }
      if (ns.size() >= 3) {
        const LineFit fit = fit_loglog_slope(ns, means);
        out.rows.push_back({"sweep", run_cfg.kernel, gamma, 0, 0, estimator, "loglog-slope",
                            fit.slope, 0.0, cfg.seed});
        per_gamma.push_back(
            {{"gamma", gamma}, {"estimator", estimator}, {"slope", fit.slope}, {"r2", fit.r2}});
      }
    }
    out.rows.insert(out.rows.end(), conv.rows.begin(), conv.rows.end());
  }

  out.manifest = {{"command", "sweep"},
                  {"bound_only", bound_only},
                  {"gammas", gammas},
                  {"kernel", cfg.kernel},
                  {"dim", cfg.dim},
                  {"alpha", cfg.alpha},
                  {"beta", cfg.beta},
                  {"budgets", cfg.budgets},
                  {"epsilon", cfg.epsilon},
                  {"op_norm", cfg.op_norm},
                  {"seed", cfg.seed},
                  {"slopes", per_gamma}};
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound demonstration

void LowerBoundConfig::validate() const {
  if (kernel != "brownian" && kernel != "torus")
    throw ConfigError("lower-bound: kernel must be brownian or torus");
  if (m < 1 || n < 1)
    throw ConfigError("lower-bound: m and n must be >= 1");
  if (m > spectrum)
    throw ConfigError("lower-bound: m exceeds the stored spectrum");
  if (static_cast<std::size_t>(0) == spectrum || spectrum < n)
    throw ConfigError("lower-bound: spectrum must cover the budget n");
  if (!(c > 0))
    throw ConfigError("lower-bound: c must be positive");
  const double pp = p();
  if (!(pp > 0) || !(pp < 1))
    throw ConfigError("lower-bound: p = 1/(2mn) must lie in (0,1)");
  if (trials < 1 || event_trials < 1 || test_size < 1)
    throw ConfigError("lower-bound: trials, event_trials, test_size must be >= 1");
  if (grid_n < 16)
    throw ConfigError("lower-bound: grid too small");
  if (kernel == "torus" && !(2.0 * gamma > 1))
    throw ConfigError("lower-bound: trace class needs 2*gamma > 1");
}

RunOutput run_lower_bound_demo(const LowerBoundConfig& cfg) {
  cfg.validate();
  const double p = cfg.p();

  const EigenSystem sys = cfg.kernel == "brownian"
                              ? brownian_eigensystem(cfg.spectrum)
                              : torus_eigensystem(cfg.alpha, cfg.beta, cfg.gamma, 1, cfg.spectrum);
  const GridPtr grid = make_grid(1, cfg.grid_n, sys.domain());
  const CoefficientLaw law = CoefficientLaw::three_point(p);
  const KlSampler sampler(sys, cfg.spectrum, grid, law);

  RunOutput out;
  const double gamma_col = cfg.kernel == "torus" ? cfg.gamma : 0.0;
  auto push = [&](long trial, const std::string& estimator, const std::string& metric,
                  double value, double se, std::uint64_t seed) {
    out.rows.push_back({"lower-bound", cfg.kernel, gamma_col, static_cast<long>(cfg.n), trial,
                        estimator, metric, value, se, seed});
  };

  // Blind-event frequency over cheap coefficient-only trials. Only the first
  // m coefficients of each of the n training draws matter, and they coincide
  // with the leading block of the full-length draws from the same stream.
  long event_hits = 0;
  for (int e = 0; e < cfg.event_trials; ++e) {
    const std::uint64_t s = sub_seed(cfg.seed, kEvent, static_cast<std::uint64_t>(e));
    bool blind = true;
    for (std::size_t i = 0; i < cfg.n && blind; ++i) {
      const Eigen::VectorXd xi = sampler.draw_coefficients(s, i);
      for (std::size_t j = 0; j < cfg.m; ++j)
        if (std::abs(xi[static_cast<Eigen::Index>(j)]) >= 1e-12) {
          blind = false;
          break;
        }
    }
    if (blind)
      ++event_hits;
  }
  const double freq = static_cast<double>(event_hits) / cfg.event_trials;
  const double freq_se = std::sqrt(std::max(freq * (1.0 - freq), 0.0) / cfg.event_trials);
  const double predicted = std::pow(1.0 - p, static_cast<double>(cfg.n) * static_cast<double>(cfg.m));

  // Full trials: new signs, new training set, passive fit, Monte Carlo risk;
  // the active fit on the same instance for contrast.
  std::vector<double> passive_risks, active_risks;
  nlohmann::json accounting = nlohmann::json::array();
  bool accounting_ok = true;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const HardInstance inst =
        make_hard_instance(sys, cfg.m, cfg.n, cfg.c, sub_seed(cfg.seed, kSigns, static_cast<std::uint64_t>(trial)));
    const Oracle oracle = hard_instance_oracle(inst, grid);

    const std::uint64_t train_seed = sub_seed(cfg.seed, kTrain, static_cast<std::uint64_t>(trial));
    std::vector<FieldFunction> inputs, outputs;
    std::uint64_t before = oracle.calls();
    double input_mass = 0;
    for (std::size_t i = 0; i < cfg.n; ++i) {
      inputs.push_back(sampler.sample(train_seed, i).field);
      outputs.push_back(oracle(inputs.back()));
      input_mass = std::max(input_mass, l2_norm_sq(inputs.back()));
    }
    const std::uint64_t passive_calls = oracle.calls() - before;

    // Under the sparse law a whole training set can come out zero; the
    // least-squares pseudoinverse of the zero operator is the zero
    // estimator, which fit_passive_lsq rejects as degenerate input.
    const RankOneOperator passive =
        input_mass > 0 ? fit_passive_lsq(inputs, outputs) : RankOneOperator{};
    const std::uint64_t risk_seed = sub_seed(cfg.seed, kRisk, static_cast<std::uint64_t>(trial));
    const RiskReport passive_risk =
        expected_risk_mc(passive, oracle, sys, cfg.spectrum, static_cast<std::size_t>(cfg.test_size),
                         risk_seed, grid, law);
    passive_risks.push_back(passive_risk.mean);
    push(trial, "passive-lsq", "absolute-risk", passive_risk.mean, passive_risk.std_error,
         train_seed);

    before = oracle.calls();
    const RankOneOperator active = fit_active(sys, oracle, cfg.n, grid);
    const std::uint64_t active_calls = oracle.calls() - before;
    const RiskReport active_risk =
        expected_risk_mc(active, oracle, sys, cfg.spectrum, static_cast<std::size_t>(cfg.test_size),
                         risk_seed, grid, law);
    active_risks.push_back(active_risk.mean);
    push(trial, "active", "absolute-risk", active_risk.mean, active_risk.std_error, train_seed);

    const bool ok = passive_calls == cfg.n && active_calls == cfg.n;
    accounting_ok = accounting_ok && ok;
    accounting.push_back({{"trial", trial},
                          {"passive_calls", passive_calls},
                          {"active_calls", active_calls},
                          {"expected", cfg.n},
                          {"ok", ok}});
  }

  auto mean_se = [](const std::vector<double>& xs, double& mean, double& se) {
    mean = 0;
    for (double x : xs)
      mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0;
    for (double x : xs)
      acc += (x - mean) * (x - mean);
    se = xs.size() > 1 ? std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0) /
                                   static_cast<double>(xs.size()))
                       : 0.0;
  };
  double passive_mean = 0, passive_se = 0, active_mean = 0, active_se = 0;
  mean_se(passive_risks, passive_mean, passive_se);
  mean_se(active_risks, active_mean, active_se);

  const double bound = lower_bound_value(sys, cfg.m, cfg.c);
  push(-1, "passive-lsq", "mean-absolute-risk", passive_mean, passive_se, cfg.seed);
  push(-1, "active", "mean-absolute-risk", active_mean, active_se, cfg.seed);
  push(-1, "theory", "lower-bound-value", bound, 0.0, cfg.seed);
  push(-1, "theory", "event-probability", predicted, 0.0, cfg.seed);
  push(-1, "empirical", "event-frequency", freq, freq_se, cfg.seed);
  push(-1, "theory", "active-tail-bound",
       cfg.c * cfg.c * sys.tail_sum(cfg.n), 0.0, cfg.seed);

  out.manifest = {{"command", "lower-bound"},
                  {"config",
                   {{"kernel", cfg.kernel},
                    {"spectrum", cfg.spectrum},
                    {"m", cfg.m},
                    {"n", cfg.n},
                    {"c", cfg.c},
                    {"p", p},
                    {"trials", cfg.trials},
                    {"event_trials", cfg.event_trials},
                    {"test_size", cfg.test_size},
                    {"grid_n", cfg.grid_n},
                    {"seed", cfg.seed}}},
                  {"eigensystem", sys.descriptor()},
                  {"oracle_call_accounting", accounting},
                  {"accounting_ok", accounting_ok}};
  if (!accounting_ok)
    throw NumericalError("run_lower_bound_demo: oracle-call accounting failed");
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(tok);
  if (!line.empty() && line.back() == ',')
    out.push_back("");
  return out;
}

bool parse_positive(const std::string& s, double& v) {
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size() && v > 0;
  } catch (...) {
    return false;
  }
}

} // namespace

std::string emit_plot_data(std::istream& csv_in, const std::vector<std::string>& group_keys,
                           const std::string& value_column) {
  std::string line;
  if (!std::getline(csv_in, line))
    throw ConfigError("aggregate: empty input");
  const std::vector<std::string> header = split_csv_line(line);

  auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw ConfigError("aggregate: missing column " + name);
  };
  std::vector<std::size_t> key_cols;
  for (const std::string& k : group_keys)
    key_cols.push_back(column_of(k));
  const std::size_t value_col = column_of(value_column);

  struct Acc {
    std::vector<std::string> keys;
    long count = 0;
    double sum = 0, sum_sq = 0;
  };
  std::vector<Acc> groups;
  std::map<std::string, std::size_t> index;

  bool any_row = false;
  while (std::getline(csv_in, line)) {
    if (line.empty())
      continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError("aggregate: ragged row");
    any_row = true;
    std::string key;
    std::vector<std::string> key_vals;
    for (std::size_t c : key_cols) {
      key += cells[c];
      key += '\x1f';
      key_vals.push_back(cells[c]);
    }
    double v = 0;
    if (!parse_positive(cells[value_col], v)) {
      try {
        v = std::stod(cells[value_col]);
      } catch (...) {
        throw ConfigError("aggregate: non-numeric value cell");
      }
    }
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, groups.size());
      groups.push_back({key_vals, 1, v, v * v});
    } else {
      Acc& a = groups[it->second];
      ++a.count;
      a.sum += v;
      a.sum_sq += v * v;
    }
  }
  if (!any_row)
    throw ConfigError("aggregate: no data rows");

  // log10 columns for group keys whose every value is a positive number.
  std::vector<bool> key_numeric(group_keys.size(), true);
  for (const Acc& g : groups)
    for (std::size_t k = 0; k < group_keys.size(); ++k) {
      double tmp;
      if (!parse_positive(g.keys[k], tmp))
        key_numeric[k] = false;
    }

  std::string out;
  for (const std::string& k : group_keys) {
    out += k;
    out += ',';
  }
  out += "count,mean,stderr";
  for (std::size_t k = 0; k < group_keys.size(); ++k)
    if (key_numeric[k]) {
      out += ",log10_";
      out += group_keys[k];
    }
  out += ",log10_mean\n";

  for (const Acc& g : groups) {
    for (const std::string& kv : g.keys) {
      out += kv;
      out += ',';
    }
    const double mean = g.sum / static_cast<double>(g.count);
    double se = 0;
    if (g.count > 1) {
      const double var =
          std::max(0.0, (g.sum_sq - g.sum * g.sum / static_cast<double>(g.count)) /
                            (static_cast<double>(g.count) - 1.0));
      se = std::sqrt(var / static_cast<double>(g.count));
    }
    out += std::to_string(g.count);
    out += ',';
    out += fmt_g(mean);
    out += ',';
    out += fmt_g(se);
    for (std::size_t k = 0; k < group_keys.size(); ++k)
      if (key_numeric[k]) {
        double v = 0;
        parse_positive(g.keys[k], v);
        out += ',';
        out += fmt_g(std::log10(v));
      }
    out += ',';
    out += mean > 0 ? fmt_g(std::log10(mean)) : std::string();
    out += '\n';
  }
  return out;
}

} // namespace opal
