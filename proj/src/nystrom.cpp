// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "eigensystem_impl.hpp"
#include "opal/eigensystem.hpp"

namespace opal {

namespace {

Eigen::MatrixXd draw_samples(int dim, Domain domain, const Measure& measure, int n,
                             std::uint64_t seed) {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(n, 2);
  auto rng = seeded_rng(seed, stream_id(0x6e79u /* "ny" */));
  if (measure.kind == Measure::Kind::GaussianDensity) {
    std::normal_distribution<double> normal(0.0, std::sqrt(measure.sigma2));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k)
        pts(i, k) = normal(rng);
    return pts;
  }
  // Lebesgue, normalized to the uniform probability measure on the domain.
  const double lo = domain == Domain::IntervalPM1 ? -1.0 : 0.0;
  std::uniform_real_distribution<double> uniform(lo, 1.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k)
      pts(i, k) = uniform(rng);
  return pts;
}

// Top-k eigenpairs of a symmetric PSD matrix by blocked subspace iteration
// with Rayleigh-Ritz extraction.
struct TopEigen {
  Eigen::VectorXd values;  // descending, length k
  Eigen::MatrixXd vectors; // n x k, orthonormal
};

TopEigen top_eigenpairs(const Eigen::MatrixXd& K, int k, std::uint64_t seed) {
  const Eigen::Index n = K.rows();
  const Eigen::Index block = std::min<Eigen::Index>(n, k + std::max<Eigen::Index>(4, k / 2));

  auto rng = seeded_rng(seed, stream_id(0x7373u /* "ss" */));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < block; ++j)
      X(i, j) = normal(rng);

  Eigen::VectorXd ritz_prev = Eigen::VectorXd::Zero(block);
  Eigen::MatrixXd basis;
  Eigen::VectorXd ritz;
  Eigen::MatrixXd ritz_vectors;
  const int max_iter = 300;
  for (int it = 0; it < max_iter; ++it) {
    basis = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ() *
            Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd KQ = K * basis;
    const Eigen::MatrixXd small = basis.transpose() * KQ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
    ritz = es.eigenvalues().reverse();
    ritz_vectors = es.eigenvectors().rowwise().reverse();
    const double scale = std::max(std::abs(ritz[0]), 1e-300);
    if ((ritz - ritz_prev).cwiseAbs().maxCoeff() <= 1e-12 * scale && it >= 3)
      break;
    ritz_prev = ritz;
    X = KQ; // next power step
  }

  TopEigen out;
  out.values = ritz.head(k);
  out.vectors = basis * ritz_vectors.leftCols(k);
  return out;
}

// Largest eigenvalue magnitude by power iteration; 0 for the zero matrix.
double spectral_radius(const Eigen::MatrixXd& K, std::uint64_t seed) {
  auto rng = seeded_rng(seed, stream_id(0x7072u /* "pr" */));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(K.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = normal(rng);
  x.normalize();
  double est = 0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd y = K * x;
    const double norm = y.norm();
    if (norm <= 1e-300)
      return 0.0;
    const double next = x.dot(y);
    x = y / norm;
    if (std::abs(next - est) <= 1e-12 * std::max(std::abs(next), 1e-300) && it >= 3) {
      est = next;
      break;
    }
    est = next;
  }
  return std::abs(est);
}

class NystromImpl final : public EigenSystemImpl {
public:
  NystromImpl(KernelFn kernel, int dim, Domain domain, Measure measure, int n_samples,
              std::size_t count, std::uint64_t seed)
      : kernel_(std::move(kernel)), dim_(dim), domain_(domain), measure_(measure) {
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("nystrom_eigensystem: dim must be 1 or 2");
    if (count < 1)
      throw std::invalid_argument("nystrom_eigensystem: count must be >= 1");
    if (n_samples < static_cast<int>(count))
      throw std::invalid_argument("nystrom_eigensystem: need N >= count samples");
    if (!kernel_)
      throw std::invalid_argument("nystrom_eigensystem: null kernel");

    const int n = n_samples;
    solve_.samples = draw_samples(dim, domain, measure, n, seed);

    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      const Point xi{solve_.samples(i, 0), solve_.samples(i, 1)};
      for (int j = 0; j <= i; ++j) {
        const Point xj{solve_.samples(j, 0), solve_.samples(j, 1)};
        const double v = kernel_(xi, xj);
        K(i, j) = v;
        K(j, i) = v;
      }
    }
    solve_.matrix_trace = K.trace();

    // Indefiniteness check: the most negative eigenvalue of K equals
    // radius - lambda_max(radius I - K).
    const double radius = spectral_radius(K, seed ^ 0x51u);
    if (radius > 0) {
      Eigen::MatrixXd shifted = -K;
      shifted.diagonal().array() += radius;
      const double lambda_min = radius - spectral_radius(shifted, seed ^ 0x52u);
      const double tol = 1e-8 * std::max(solve_.matrix_trace, 0.0) + 1e-12 * n;
      if (lambda_min < -tol)
        throw NumericalError("nystrom_eigensystem: kernel matrix is not positive semidefinite");
    }

    if (radius == 0.0) {
      // Degenerate PSD input: all-zero spectrum accepted.
      solve_.gammas = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
      solve_.top_vectors = Eigen::MatrixXd::Identity(n, static_cast<Eigen::Index>(count));
    } else {
      const TopEigen top = top_eigenpairs(K, static_cast<int>(count), seed ^ 0x53u);
      solve_.gammas = top.values;
      solve_.top_vectors = top.vectors;
    }

    count_ = count;
    n_ = n;
    prefix_.resize(count + 1);
    prefix_[0] = 0.0;
    for (std::size_t j = 0; j < count; ++j)
      prefix_[j + 1] = prefix_[j] + std::max(solve_.gammas[static_cast<Eigen::Index>(j)], 0.0) / n;

    labels_.reserve(count_);
    for (std::size_t j = 0; j < count_; ++j)
      labels_.push_back("n" + std::to_string(j + 1));
  }

  int dim() const override { return dim_; }
  Domain domain() const override { return domain_; }
  Measure native_measure() const override { return measure_; }
  std::size_t count() const override { return count_; }
  const std::string& label(std::size_t j) const override { return labels_[j]; }
  std::string kind() const override { return "nystrom"; }
  nlohmann::json params() const override {
    nlohmann::json j{{"samples", n_}};
    if (measure_.kind == Measure::Kind::GaussianDensity)
      j["measure"] = {{"kind", "gaussian"}, {"sigma2", measure_.sigma2}};
    else
      j["measure"] = {{"kind", "lebesgue"}};
    return j;
  }

  double eigenvalue(std::size_t j) const override {
    return std::max(solve_.gammas[static_cast<Eigen::Index>(j)], 0.0) / n_;
  }

  // Out-of-sample extension phi_j(y) = (sqrt(N)/gamma_j) sum_i K(y,x_i) u_ji.
  double eval(std::size_t j, const Point& y) const override {
    const double gamma = solve_.gammas[static_cast<Eigen::Index>(j)];
    if (!(gamma > 0))
      return 0.0;
    double acc = 0;
    for (int i = 0; i < n_; ++i) {
      const Point xi{solve_.samples(i, 0), solve_.samples(i, 1)};
      acc += kernel_(y, xi) * solve_.top_vectors(i, static_cast<Eigen::Index>(j));
    }
    return std::sqrt(static_cast<double>(n_)) / gamma * acc;
  }

  // trace(K)/N equals the full eigenvalue-estimate sum; the stored spectrum
  // is truncated at `count` entries.
  double trace() const override { return std::max(solve_.matrix_trace, 0.0) / n_; }

  double head_sum(std::size_t n) const override {
    if (n >= prefix_.size())
      return prefix_.back();
    return prefix_[n];
  }

  const NystromSolve* nystrom() const override { return &solve_; }

private:
  KernelFn kernel_;
  int dim_;
  Domain domain_;
  Measure measure_;
  int n_ = 0;
  std::size_t count_ = 0;
  NystromSolve solve_;
  std::vector<double> prefix_;
  std::vector<std::string> labels_;
};

} // namespace

EigenSystem nystrom_eigensystem(const KernelFn& kernel, int dim, Domain domain, Measure measure,
                                int n_samples, std::size_t count, std::uint64_t seed) {
  return EigenSystem(
      std::make_shared<NystromImpl>(kernel, dim, domain, measure, n_samples, count, seed));
}

} // namespace opal
