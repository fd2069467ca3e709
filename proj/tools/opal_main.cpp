// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "opal/experiment.hpp"
#include "opal/oracle.hpp"

namespace {

using namespace opal;

std::unique_ptr<std::ofstream> open_out(const std::string& path, std::ostream*& os) {
  if (path.empty() || path == "-") {
    os = &std::cout;
    return nullptr;
  }
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f)
    throw ConfigError("cannot open output file " + path);
  os = f.get();
  return f;
}

struct KernelOptions {
  std::string kernel = "dirichlet-box";
  double alpha = 2500, beta = 1, gamma = 2;
  int dim = 2;
  double lengthscale = 1.0, sigma2 = 1.0;
  std::size_t count = 64;
  int nystrom_samples = 1000;
  std::uint64_t nystrom_seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", kernel,
                    "torus | dirichlet-box | brownian | rbf | nystrom-rbf | nystrom-brownian")
        ->check(CLI::IsMember({"torus", "dirichlet-box", "brownian", "rbf", "nystrom-rbf",
                               "nystrom-brownian"}));
    cmd->add_option("--alpha", alpha, "covariance scale");
    cmd->add_option("--beta", beta, "covariance shift");
    cmd->add_option("--gamma", gamma, "covariance decay exponent");
    cmd->add_option("--dim", dim, "domain dimension")->check(CLI::Range(1, 2));
    cmd->add_option("--lengthscale", lengthscale, "RBF lengthscale");
    cmd->add_option("--sigma2", sigma2, "RBF Gaussian measure variance");
    cmd->add_option("--count", count, "number of eigenpairs");
    cmd->add_option("--nystrom-samples", nystrom_samples, "sample count for nystrom kernels");
    cmd->add_option("--nystrom-seed", nystrom_seed, "sampling seed for nystrom kernels");
  }

  EigenSystem build() const {
    if (kernel == "torus")
      return torus_eigensystem(alpha, beta, gamma, dim, count);
    if (kernel == "dirichlet-box")
      return dirichlet_box_eigensystem(alpha, beta, gamma, dim, count);
    if (kernel == "brownian")
      return brownian_eigensystem(count);
    if (kernel == "rbf")
      return rbf_eigensystem_nd(lengthscale, sigma2, dim, count);
    if (kernel == "nystrom-rbf") {
      const double ell = lengthscale;
      const KernelFn fn = [ell](const Point& a, const Point& b) {
        const double dx = a[0] - b[0], dy = a[1] - b[1];
        return std::exp(-(dx * dx + dy * dy) / (2.0 * ell * ell));
      };
      return nystrom_eigensystem(fn, dim, Domain::IntervalPM1, Measure::gaussian(sigma2),
                                 nystrom_samples, count, nystrom_seed);
    }
    const KernelFn fn = [](const Point& a, const Point& b) { return std::min(a[0], b[0]); };
    return nystrom_eigensystem(fn, 1, Domain::Box01, Measure::lebesgue(), nystrom_samples,
                               count, nystrom_seed);
  }
};

GridPtr grid_for(const EigenSystem& sys, int points) {
  return make_grid(sys.dim(), points, sys.domain(), sys.native_measure());
}

int run(int argc, char** argv) {
  CLI::App app{"opal: active operator learning laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.config_formatter(std::make_shared<CLI::ConfigTOML>());

  // --- eig: dump a spectrum --------------------------------------------------
  auto* eig = app.add_subcommand("eig", "write a spectrum CSV (rank,eigenvalue,label)");
  KernelOptions eig_kernel;
  eig_kernel.attach(eig);
  std::string eig_out = "-";
  std::string eig_samples_out;
  eig->add_option("--out", eig_out, "output path or - for stdout");
  eig->add_option("--dump-samples", eig_samples_out,
                  "also write nystrom sample points to this CSV");

  // --- sample: dump a KL field ----------------------------------------------
  auto* sample = app.add_subcommand("sample", "draw a KL field and write it as CSV");
  KernelOptions sample_kernel;
  sample_kernel.attach(sample);
  int sample_points = 64;
  std::size_t sample_m = 0;
  std::string sample_law = "gaussian";
  double sample_p = 0.5;
  std::uint64_t sample_seed = 0;
  std::string sample_dir = "sample_out";
  sample->add_option("--points", sample_points, "grid points per dimension");
  sample->add_option("--truncation", sample_m, "KL truncation (default: full spectrum)");
  sample->add_option("--law", sample_law, "gaussian | three-point")
      ->check(CLI::IsMember({"gaussian", "three-point"}));
  sample->add_option("--p", sample_p, "three-point sparsity");
  sample->add_option("--seed", sample_seed, "RNG seed");
  sample->add_option("--out-dir", sample_dir, "directory for field.csv + manifest.json");

  // --- solve: one-shot oracle application ------------------------------------
  auto* solve = app.add_subcommand("solve", "apply a PDE oracle to a field CSV");
  std::string solve_eq = "poisson-spectral";
  int solve_points = 64, solve_steps = 1000, solve_cap = 0;
  double solve_tau = 1e-2;
  std::string solve_in, solve_out = "-";
  solve->add_option("--equation", solve_eq, "poisson-fd | poisson-spectral | heat-fd | heat-spectral")
      ->check(CLI::IsMember({"poisson-fd", "poisson-spectral", "heat-fd", "heat-spectral"}));
  solve->add_option("--points", solve_points, "grid points per dimension");
  solve->add_option("--tau", solve_tau, "heat diffusivity");
  solve->add_option("--steps", solve_steps, "heat time steps");
  solve->add_option("--mode-cap", solve_cap, "spectral mode cap (0 = points/2 - 1)");
  solve->add_option("--in", solve_in, "input field CSV")->required();
  solve->add_option("--out", solve_out, "output path or - for stdout");

  // --- converge ---------------------------------------------------------------
  auto* converge = app.add_subcommand("converge", "run the convergence experiment");
  ExperimentConfig cc;
  std::string converge_dir = "converge_out";
  auto attach_experiment = [](CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--equation", cfg.equation, "poisson | heat")
        ->check(CLI::IsMember({"poisson", "heat"}));
    cmd->add_option("--alpha", cfg.alpha, "covariance scale");
    cmd->add_option("--beta", cfg.beta, "covariance shift");
    cmd->add_option("--gamma", cfg.gamma, "covariance decay exponent");
    cmd->add_option("--grid", cfg.grid_n, "grid points per dimension (power of two)");
    cmd->add_option("--budgets", cfg.budgets, "training budgets, ascending")->delimiter(',');
    cmd->add_option("--trials", cfg.trials, "trials per budget");
    cmd->add_option("--test-size", cfg.test_size, "test samples per trial");
    cmd->add_option("--oracle", cfg.oracle, "fd | spectral")
        ->check(CLI::IsMember({"fd", "spectral"}));
    cmd->add_option("--epsilon", cfg.epsilon, "oracle degradation");
    cmd->add_option("--noise-mode", cfg.noise_mode, "fixed | random")
        ->check(CLI::IsMember({"fixed", "random"}));
    cmd->add_option("--estimators", cfg.estimators, "subset of {active, passive-lsq}")->delimiter(',');
    cmd->add_option("--tau", cfg.tau, "heat diffusivity");
    cmd->add_option("--steps", cfg.steps, "heat time steps");
    cmd->add_option("--mode-cap", cfg.mode_cap, "spectral mode cap (0 = auto)");
    cmd->add_option("--kl-truncation", cfg.kl_truncation, "KL truncation (0 = auto)");
    cmd->add_option("--svd-tol", cfg.svd_trunc_tol, "passive SVD truncation tolerance");
    cmd->add_option("--seed", cfg.seed, "master seed");
  };
  attach_experiment(converge, cc);
  converge->add_option("--out-dir", converge_dir, "directory for results.csv + manifest.json");

  // --- sweep -------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "gamma sweep with fitted log-log slopes");
  ExperimentConfig sc;
  std::vector<double> sweep_gammas = {1.5, 2.0, 2.5};
  bool sweep_bound_only = false;
  std::string sweep_dir = "sweep_out";
  attach_experiment(sweep, sc);
  sweep->add_option("--gammas", sweep_gammas, "gamma values")->delimiter(',');
  sweep->add_flag("--bound-only", sweep_bound_only, "analytic bound slopes, no Monte Carlo");
  sweep->add_option("--sweep-kernel", sc.kernel, "torus | dirichlet-box (bound-only)")
      ->check(CLI::IsMember({"torus", "dirichlet-box"}));
  sweep->add_option("--sweep-dim", sc.dim, "domain dimension (bound-only)")
      ->check(CLI::Range(1, 2));
  sweep->add_option("--op-norm", sc.op_norm, "operator norm for the bound");
  sweep->add_option("--out-dir", sweep_dir, "output directory");

  // --- lower-bound ---------------------------------------------------------------
  auto* lower = app.add_subcommand("lower-bound", "hard-instance demonstration");
  LowerBoundConfig lc;
  std::string lower_dir = "lower_bound_out";
  lower->add_option("--kernel", lc.kernel, "brownian | torus")
      ->check(CLI::IsMember({"brownian", "torus"}));
  lower->add_option("--alpha", lc.alpha, "torus covariance scale");
  lower->add_option("--beta", lc.beta, "torus covariance shift");
  lower->add_option("--gamma", lc.gamma, "torus covariance exponent");
  lower->add_option("--spectrum", lc.spectrum, "stored eigenpairs");
  lower->add_option("--m", lc.m, "protected dimension");
  lower->add_option("--n", lc.n, "training budget");
  lower->add_option("--c", lc.c, "operator norm of the hard instance");
  lower->add_option("--trials", lc.trials, "full fit+risk trials");
  lower->add_option("--event-trials", lc.event_trials, "coefficient-only trials for P[E]");
  lower->add_option("--test-size", lc.test_size, "risk Monte Carlo samples per trial");
  lower->add_option("--grid", lc.grid_n, "grid points");
  lower->add_option("--seed", lc.seed, "master seed");
  lower->add_option("--out-dir", lower_dir, "output directory");

  // --- aggregate -------------------------------------------------------------------
  auto* aggregate = app.add_subcommand("aggregate", "group a results CSV into plot data");
  std::string agg_in, agg_out = "-", agg_value = "value";
  std::vector<std::string> agg_keys = {"estimator", "n"};
  aggregate->add_option("--in", agg_in, "input results CSV")->required();
  aggregate->add_option("--keys", agg_keys, "group key columns")->delimiter(',');
  aggregate->add_option("--value", agg_value, "value column");
  aggregate->add_option("--out", agg_out, "output path or - for stdout");

  CLI11_PARSE(app, argc, argv);

  if (eig->parsed()) {
    const EigenSystem sys = eig_kernel.build();
    std::ostream* os = nullptr;
    auto file = open_out(eig_out, os);
    write_spectrum_csv(*os, sys);
    if (!eig_samples_out.empty()) {
      const NystromSolve* solve = sys.nystrom();
      if (!solve)
        throw ConfigError("--dump-samples applies to nystrom kernels only");
      std::ofstream sf(eig_samples_out, std::ios::binary);
      if (!sf)
        throw ConfigError("cannot open " + eig_samples_out);
      sf << (sys.dim() == 2 ? "x,y\n" : "x\n");
      for (Eigen::Index i = 0; i < solve->samples.rows(); ++i) {
        sf << fmt_g(solve->samples(i, 0));
        if (sys.dim() == 2)
          sf << ',' << fmt_g(solve->samples(i, 1));
        sf << '\n';
      }
    }
    return 0;
  }

  if (sample->parsed()) {
    const EigenSystem sys = sample_kernel.build();
    const GridPtr grid = grid_for(sys, sample_points);
    const std::size_t m = sample_m == 0 ? sys.count() : sample_m;
    const CoefficientLaw law = sample_law == "gaussian" ? CoefficientLaw::gaussian()
                                                        : CoefficientLaw::three_point(sample_p);
    const KLSample s = sample_kl(sys, m, grid, law, sample_seed);
    std::filesystem::create_directories(sample_dir);
    {
      std::ofstream f(std::filesystem::path(sample_dir) / "field.csv", std::ios::binary);
      write_field_csv(f, s.field);
    }
    nlohmann::json manifest{{"command", "sample"},
                            {"seed", sample_seed},
                            {"law", law.name()},
                            {"p", law.p},
                            {"truncation", m},
                            {"grid_points", sample_points},
                            {"eigensystem", sys.descriptor()}};
    std::ofstream mf(std::filesystem::path(sample_dir) / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << '\n';
    return 0;
  }

  if (solve->parsed()) {
    const GridPtr grid = make_grid(2, solve_points, Domain::Box01);
    std::ifstream in(solve_in);
    if (!in)
      throw ConfigError("cannot open input field " + solve_in);
    const FieldFunction f = read_field_csv(in, grid);
    const int cap = solve_cap == 0 ? solve_points / 2 - 1 : solve_cap;
    FieldFunction u;
    if (solve_eq == "poisson-fd")
      u = poisson_fd_solve(f);
    else if (solve_eq == "poisson-spectral")
      u = poisson_spectral_solve(f, cap);
    else if (solve_eq == "heat-fd")
      u = heat_fd_solve(f, solve_tau, solve_steps);
    else
      u = heat_spectral_solve(f, solve_tau, cap);
    std::ostream* os = nullptr;
    auto file = open_out(solve_out, os);
    write_field_csv(*os, u);
    return 0;
  }

  if (converge->parsed()) {
    // Heat-equation default inputs when not overridden: u0 ~ GP with
    // covariance (-lap + I)^{-1.5}.
    if (cc.equation == "heat") {
      if (converge->count("--alpha") == 0)
        cc.alpha = 1.0;
      if (converge->count("--gamma") == 0)
        cc.gamma = 1.5;
    }
    const RunOutput out = run_convergence_experiment(cc);
    write_run_output(out, converge_dir);
    std::cout << "wrote " << converge_dir << "/results.csv (" << out.rows.size() << " rows)\n";
    return 0;
  }

  if (sweep->parsed()) {
    if (sc.equation == "heat" && sweep->count("--alpha") == 0)
      sc.alpha = 100.0; // heat sweep covariance 10^2 (-lap + I)^{-gamma}
    if (sweep_bound_only && sweep->count("--budgets") == 0)
      sc.budgets = {16, 32, 64, 128, 256, 512, 1024};
    const RunOutput out = run_gamma_sweep(sc, sweep_gammas, sweep_bound_only);
    write_run_output(out, sweep_dir);
    std::cout << "wrote " << sweep_dir << "/results.csv (" << out.rows.size() << " rows)\n";
    return 0;
  }

  if (lower->parsed()) {
    const RunOutput out = run_lower_bound_demo(lc);
    write_run_output(out, lower_dir);
    std::cout << "wrote " << lower_dir << "/results.csv (" << out.rows.size() << " rows)\n";
    return 0;
  }

  if (aggregate->parsed()) {
    std::ifstream in(agg_in);
    if (!in)
      throw ConfigError("cannot open input CSV " + agg_in);
    const std::string agg = emit_plot_data(in, agg_keys, agg_value);
    std::ostream* os = nullptr;
    auto file = open_out(agg_out, os);
    *os << agg;
    return 0;
  }

  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const opal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const opal::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
