// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_EXPERIMENT_HPP
#define OPAL_EXPERIMENT_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opal/estimator.hpp"

namespace opal {

/// One line of results.csv:
/// experiment,kernel,gamma,n,trial,estimator,metric,value,stderr,seed
struct ResultRow {
  std::string experiment;
  std::string kernel;
  double gamma = 0;
  long n = 0;
  long trial = 0;
  std::string estimator;
  std::string metric;
  double value = 0;
  double std_error = 0;
  std::uint64_t seed = 0;
};

std::string results_csv(const std::vector<ResultRow>& rows);

struct RunOutput {
  std::vector<ResultRow> rows;
  nlohmann::json manifest;
};

/// Writes results.csv and manifest.json into the directory.
void write_run_output(const RunOutput& out, const std::filesystem::path& dir);

struct ExperimentConfig {
  std::string equation = "poisson";  // poisson | heat
  std::string kernel = "dirichlet-box"; // sweep bound mode may choose torus
  double alpha = 2500;               // Poisson default: 50^2 (-lap + I)^-2 inputs
  double beta = 1;
  double gamma = 2;
  int dim = 2;
  int grid_n = 64;
  std::vector<long> budgets = {4, 8, 16, 32, 64, 128, 256};
  int trials = 5;
  int test_size = 100;
  std::string oracle = "spectral";   // fd | spectral
  double epsilon = 0;
  std::string noise_mode = "fixed";  // fixed | random
  std::vector<std::string> estimators = {"active", "passive-lsq"};
  double tau = 1e-2;
  int steps = 1000;
  int mode_cap = 0;                  // 0 = grid_n/2 - 1
  std::size_t kl_truncation = 0;     // 0 = max(4*max budget, 1024)
  double svd_trunc_tol = 1e-10;
  double op_norm = 1.0;              // bound-only sweeps
  std::uint64_t seed = 0;

  void validate() const;               // full PDE experiment (throws ConfigError)
  void validate_bounds_only() const;   // analytic sweep, no oracle
  std::size_t resolved_truncation() const;
  int resolved_mode_cap() const;
};

/// Convergence study: per budget and trial, fit the requested
/// estimators against the same oracle and score them on a shared test set
/// of fresh KL samples (relative MSE and absolute risk rows).
RunOutput run_convergence_experiment(const ExperimentConfig& cfg);

/// Repeats the study per gamma and emits fitted log-log slopes. In
/// bound_only mode no sampling happens: rows contain the analytic two-term
/// bound per budget and its fitted slope.
RunOutput run_gamma_sweep(const ExperimentConfig& cfg, const std::vector<double>& gammas,
                          bool bound_only);

struct LowerBoundConfig {
  std::string kernel = "brownian";  // brownian | torus
  double alpha = 625;               // torus only
  double beta = 25;
  double gamma = 2;
  std::size_t spectrum = 64;
  std::size_t m = 10;
  std::size_t n = 20;
  double c = 1.0;
  int trials = 200;          // full fit+risk trials
  int event_trials = 10000;  // coefficient-only trials for P[E]
  int test_size = 1000;
  int grid_n = 256;
  std::uint64_t seed = 0;

  double p() const { return 1.0 / (2.0 * static_cast<double>(m) * static_cast<double>(n)); }
  void validate() const;
};

/// Hard-instance demonstration: trains passive least squares on sparse
/// three-point samples against the signed diagonal operator, estimates its
/// risk, tracks the blind event E_{n,m}, and contrasts with the active fit.
RunOutput run_lower_bound_demo(const LowerBoundConfig& cfg);

/// Groups rows of a results CSV by the given key columns and emits
/// count/mean/stderr plus log10 columns for numeric keys and the mean.
std::string emit_plot_data(std::istream& csv_in, const std::vector<std::string>& group_keys,
                           const std::string& value_column = "value");

} // namespace opal

#endif
