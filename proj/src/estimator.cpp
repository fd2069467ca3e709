// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/estimator.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace opal {

RankOneOperator::RankOneOperator(GridPtr grid, Eigen::MatrixXd left, Eigen::MatrixXd right,
                                 bool right_orthonormal)
    : grid_(std::move(grid)), left_(std::move(left)), right_(std::move(right)),
      right_orthonormal_(right_orthonormal) {
  if (!grid_)
    throw std::invalid_argument("RankOneOperator: null grid");
  if (left_.rows() != right_.rows())
    throw std::invalid_argument("RankOneOperator: left/right factor counts differ");
  if (left_.cols() != grid_->size() || right_.cols() != grid_->size())
    throw std::invalid_argument("RankOneOperator: factor length does not match grid");
}

FieldFunction RankOneOperator::apply(const FieldFunction& v) const {
  if (!v.grid)
    throw std::invalid_argument("RankOneOperator::apply: field without grid");
  if (grid_) {
    if (!v.grid->same_layout(*grid_))
      throw std::invalid_argument("RankOneOperator::apply: grid mismatch");
  }
  if (left_.rows() == 0)
    return zero_field(v.grid);
  const Eigen::VectorXd t = right_ * v.grid->weights().cwiseProduct(v.values);
  return {v.grid, left_.transpose() * t};
}

FieldFunction RankOneOperator::left_factor(std::size_t i) const {
  if (i >= terms())
    throw std::invalid_argument("RankOneOperator: factor index out of range");
  return {grid_, left_.row(static_cast<Eigen::Index>(i)).transpose()};
}

FieldFunction RankOneOperator::right_factor(std::size_t i) const {
  if (i >= terms())
    throw std::invalid_argument("RankOneOperator: factor index out of range");
  return {grid_, right_.row(static_cast<Eigen::Index>(i)).transpose()};
}

RankOneOperator fit_active(const EigenSystem& sys, const Oracle& oracle, std::size_t n,
                           const GridPtr& grid) {
  if (n > sys.count())
    throw std::invalid_argument("fit_active: n exceeds stored spectrum");
  if (!grid)
    throw std::invalid_argument("fit_active: null grid");
  Eigen::MatrixXd right = sys.basis_on(grid, n);
  Eigen::MatrixXd left(right.rows(), right.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const FieldFunction w = oracle(FieldFunction{grid, right.row(static_cast<Eigen::Index>(i)).transpose()});
    left.row(static_cast<Eigen::Index>(i)) = w.values.transpose();
  }
  return {grid, std::move(left), std::move(right), true};
}

RankOneOperator fit_passive_lsq(const std::vector<FieldFunction>& inputs,
                                const std::vector<FieldFunction>& outputs, double trunc_tol) {
  if (inputs.empty())
    throw std::invalid_argument("fit_passive_lsq: no training pairs");
  if (inputs.size() != outputs.size())
    throw std::invalid_argument("fit_passive_lsq: input/output count mismatch");
  const GridPtr grid = inputs.front().grid;
  if (!grid)
    throw std::invalid_argument("fit_passive_lsq: field without grid");

  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd V(n, grid->size());
  Eigen::MatrixXd W(n, grid->size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!inputs[i].grid->same_layout(*grid) || !outputs[i].grid->same_layout(*grid))
      throw std::invalid_argument("fit_passive_lsq: training pair on a different grid");
    V.row(i) = inputs[i].values.transpose();
    W.row(i) = outputs[i].values.transpose();
  }

  const Eigen::MatrixXd G = V * grid->weights().asDiagonal() * V.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  if (!(smax > 0))
    throw std::invalid_argument("fit_passive_lsq: all training inputs are zero");

  Eigen::VectorXd inv = svd.singularValues();
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv[i] = svd.singularValues()[i] > trunc_tol * smax ? 1.0 / svd.singularValues()[i] : 0.0;
  const Eigen::MatrixXd pinv =
      svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

  // L u = sum_l [G^+ t]_l w_l with t_l = <v_l, u>; folding G^+ into the left
  // factors keeps the operator a plain rank-one sum over the raw inputs.
  Eigen::MatrixXd left = pinv * W;
  return {grid, std::move(left), std::move(V), false};
}

namespace {

double sample_std_error(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2)
    return 0.0;
  double acc = 0;
  for (double x : xs)
    acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0) /
                   static_cast<double>(xs.size()));
}

void finalize(RiskReport& report) {
  double acc = 0;
  for (double e : report.per_sample)
    acc += e;
  report.mean = report.per_sample.empty() ? 0.0 : acc / static_cast<double>(report.per_sample.size());
  report.std_error = sample_std_error(report.per_sample, report.mean);
}

} // namespace

RiskReport relative_mse(const RankOneOperator& est, const Oracle& truth,
                        const std::vector<FieldFunction>& test_inputs) {
  if (test_inputs.empty())
    throw std::invalid_argument("relative_mse: empty test set");
  RiskReport report;
  report.metric = "relative-mse";
  report.oracle = truth.info();
  report.n = est.terms();
  for (const FieldFunction& v : test_inputs) {
    const FieldFunction u_true = truth(v);
    const double denom = l2_norm_sq(u_true);
    if (denom < 1e-14) {
      ++report.skipped;
      continue;
    }
    const FieldFunction u_pred = est.apply(v);
    const FieldFunction diff{u_true.grid, u_true.values - u_pred.values};
    report.per_sample.push_back(l2_norm_sq(diff) / denom);
  }
  if (report.per_sample.empty())
    throw NumericalError("relative_mse: every test output was numerically zero");
  finalize(report);
  return report;
}

RiskReport expected_risk_mc(const RankOneOperator& est, const Oracle& truth,
                            const EigenSystem& sys, std::size_t truncation, std::size_t n_test,
                            std::uint64_t seed, const GridPtr& grid, CoefficientLaw law) {
  if (n_test == 0)
    throw std::invalid_argument("expected_risk_mc: empty test set");
  const KlSampler sampler(sys, truncation, grid, law);
  RiskReport report;
  report.metric = "absolute-risk";
  report.oracle = truth.info();
  report.n = est.terms();
  report.seed = seed;
  report.per_sample.reserve(n_test);
  for (std::size_t s = 0; s < n_test; ++s) {
    const KLSample v = sampler.sample(seed, s);
    const FieldFunction u_true = truth(v.field);
    const FieldFunction u_pred = est.apply(v.field);
    const FieldFunction diff{u_true.grid, u_true.values - u_pred.values};
    report.per_sample.push_back(l2_norm_sq(diff));
  }
  finalize(report);
  return report;
}

BoundReport upper_bound(const EigenSystem& sys, std::size_t n, double epsilon, double op_norm) {
  if (epsilon < 0 || op_norm < 0)
    throw std::invalid_argument("upper_bound: epsilon and op_norm must be nonnegative");
  BoundReport b;
  b.n = n;
  b.epsilon = epsilon;
  b.op_norm = op_norm;
  b.head_sum = sys.head_sum(n);
  b.tail_sum = sys.tail_sum(n);
  b.total = epsilon * epsilon * b.head_sum + op_norm * op_norm * b.tail_sum;
  return b;
}

double lower_bound_value(const EigenSystem& sys, std::size_t m, double op_norm) {
  if (m < 1)
    throw std::invalid_argument("lower_bound_value: m must be >= 1");
  return 0.5 * op_norm * op_norm * sys.head_sum(m);
}

double op_norm_estimate(const Oracle& oracle, const EigenSystem& probe_basis, std::size_t k,
                        const GridPtr& grid) {
  if (k < 1)
    throw std::invalid_argument("op_norm_estimate: k must be >= 1");
  if (k > probe_basis.count())
    throw std::invalid_argument("op_norm_estimate: k exceeds probe spectrum");

  Eigen::MatrixXd outputs(static_cast<Eigen::Index>(k), grid->size());
  double best_ratio = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const FieldFunction phi = probe_basis.eigenfunction_on(j, grid);
    const FieldFunction y = oracle(phi);
    outputs.row(static_cast<Eigen::Index>(j)) = y.values.transpose();
    const double denom = l2_norm(phi);
    if (denom > 0)
      best_ratio = std::max(best_ratio, l2_norm(y) / denom);
  }

  // Rayleigh refinement on the Gram of the probed outputs; a lower estimate
  // of |F|_op restricted to the probed span.
  const Eigen::MatrixXd gram = outputs * grid->weights().asDiagonal() * outputs.transpose();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(gram.rows());
  x.normalize();
  for (int it = 0; it < 20; ++it) {
    Eigen::VectorXd y = gram * x;
    const double norm = y.norm();
    if (norm == 0.0)
      break;
    x = y / norm;
  }
  const double rayleigh = x.dot(gram * x);
  return std::max(best_ratio, std::sqrt(std::max(0.0, rayleigh)));
}

LineFit fit_loglog_slope(std::span<const double> ns, std::span<const double> errors) {
  if (ns.size() != errors.size())
    throw std::invalid_argument("fit_loglog_slope: length mismatch");
  if (ns.size() < 3)
    throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
  const std::size_t k = ns.size();
  std::vector<double> xs(k), ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0) || !(errors[i] > 0))
      throw std::invalid_argument("fit_loglog_slope: values must be positive");
    xs[i] = std::log(ns[i]);
    ys[i] = std::log(errors[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0)
    throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0) {
    fit.r2 = 1.0;
  } else {
    double ss_res = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
      ss_res += resid * resid;
    }
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

} // namespace opal
