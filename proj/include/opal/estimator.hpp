// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_ESTIMATOR_HPP
#define OPAL_ESTIMATOR_HPP

#include <span>
#include <string>
#include <vector>

#include "opal/oracle.hpp"
#include "opal/random_field.hpp"

namespace opal {

/// Finite rank-one sum v -> sum_i <right_i, v> left_i. The passive
/// least-squares estimator folds its Gram pseudoinverse into the left
/// factors, so application is the same expression for both estimators.
class RankOneOperator {
public:
  RankOneOperator() = default;
  RankOneOperator(GridPtr grid, Eigen::MatrixXd left, Eigen::MatrixXd right,
                  bool right_orthonormal);

  FieldFunction apply(const FieldFunction& v) const;
  std::size_t terms() const { return static_cast<std::size_t>(left_.rows()); }
  bool right_orthonormal() const { return right_orthonormal_; }
  const GridPtr& grid() const { return grid_; }
  FieldFunction left_factor(std::size_t i) const;
  FieldFunction right_factor(std::size_t i) const;

private:
  GridPtr grid_;
  Eigen::MatrixXd left_;   // terms x nodes
  Eigen::MatrixXd right_;  // terms x nodes
  bool right_orthonormal_ = false;
};

/// Active strategy: query the oracle on the first n eigenfunctions and
/// return sum_i O(phi_i) (x) phi_i. Makes exactly n oracle calls.
RankOneOperator fit_active(const EigenSystem& sys, const Oracle& oracle, std::size_t n,
                           const GridPtr& grid);

/// Passive least squares (sum w_i (x) v_i)(sum v_i (x) v_i)^+, realized
/// through the SVD of the n x n Gram matrix; singular values below
/// trunc_tol times the largest are dropped.
RankOneOperator fit_passive_lsq(const std::vector<FieldFunction>& inputs,
                                const std::vector<FieldFunction>& outputs,
                                double trunc_tol = 1e-10);

/// Per-sample errors with summary statistics.
struct RiskReport {
  std::vector<double> per_sample;
  double mean = 0;
  double std_error = 0;
  std::size_t n = 0;          // estimator's training budget
  std::string estimator;
  std::string metric;         // "relative-mse" or "absolute-risk"
  OracleInfo oracle;
  std::uint64_t seed = 0;
  std::size_t skipped = 0;    // test cases with near-zero truth (relative only)
};

/// Mean of |u_true - u_pred|^2 / |u_true|^2 over the test set; cases with
/// |u_true|^2 < 1e-14 are skipped and counted.
RiskReport relative_mse(const RankOneOperator& est, const Oracle& truth,
                        const std::vector<FieldFunction>& test_inputs);

/// Monte Carlo estimate of E_v |est(v) - truth(v)|^2 over fresh KL samples.
RiskReport expected_risk_mc(const RankOneOperator& est, const Oracle& truth,
                            const EigenSystem& sys, std::size_t truncation, std::size_t n_test,
                            std::uint64_t seed, const GridPtr& grid,
                            CoefficientLaw law = CoefficientLaw::gaussian());

/// The two-term risk bound eps^2 * head + opnorm^2 * tail and the passive
/// lower-bound value (opnorm^2 / 2) * head_m.
struct BoundReport {
  double head_sum = 0;     // sum_{i<=n} lambda_i
  double tail_sum = 0;     // sum_{i>n} lambda_i
  double epsilon = 0;
  double op_norm = 0;
  double total = 0;        // epsilon^2*head + op_norm^2*tail
  double lower_bound = 0;  // filled by lower_bound_value users
  std::size_t n = 0;
  std::size_t m = 0;
};

BoundReport upper_bound(const EigenSystem& sys, std::size_t n, double epsilon, double op_norm);
double lower_bound_value(const EigenSystem& sys, std::size_t m, double op_norm);

/// Lower estimate of the operator norm from k orthonormal probes, refined
/// by 20 power iterations on the Gram matrix of the probed outputs.
double op_norm_estimate(const Oracle& oracle, const EigenSystem& probe_basis, std::size_t k,
                        const GridPtr& grid);

struct LineFit {
  double slope = 0;
  double intercept = 0;  // natural-log intercept
  double r2 = 0;
};

/// Ordinary least squares on (log n, log error); needs >= 3 positive points.
LineFit fit_loglog_slope(std::span<const double> ns, std::span<const double> errors);

} // namespace opal

#endif
