// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_EIGENSYSTEM_HPP
#define OPAL_EIGENSYSTEM_HPP

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "opal/grid.hpp"

namespace opal {

/// Derived constants of the Hermite eigenexpansion of the RBF kernel under
/// a centered Gaussian measure: a = 1/(4 sigma^2), b = 1/(2 l^2),
/// c = sqrt(a^2 + 2ab). The eigenvalue ratio b/(a+b+c) lies in (0,1).
struct RbfEigParams {
  double a = 0;
  double b = 0;
  double c = 0;
  double lengthscale = 0;
  double sigma2 = 0;

  static RbfEigParams from(double lengthscale, double sigma2);
  double ratio() const { return b / (a + b + c); }
  double top_eigenvalue() const { return std::sqrt(2.0 * a / (a + b + c)); }
};

/// Raw output of the sampled-kernel-matrix eigensolve behind a Nystrom
/// system: sample points, the leading matrix eigenvalues gamma_j
/// (descending), and their eigenvectors u_j. Eigenvalue estimates are
/// gamma_j / N; matrix_trace / N is the exact sum of all of them.
struct NystromSolve {
  Eigen::MatrixXd samples;      // N x 2, second column unused in 1d
  Eigen::VectorXd gammas;       // top `count` matrix eigenvalues, descending
  Eigen::MatrixXd top_vectors;  // N x count, orthonormal columns
  double matrix_trace = 0;
};

class EigenSystemImpl;

/// Ordered eigenpairs (lambda_j, phi_j) of a covariance kernel, with
/// evaluable eigenfunctions and analytic head/tail sums. Value type over an
/// immutable shared implementation; evaluation is pure and thread-safe.
class EigenSystem {
public:
  EigenSystem() = default;
  explicit EigenSystem(std::shared_ptr<const EigenSystemImpl> impl) : impl_(std::move(impl)) {}

  bool empty() const { return impl_ == nullptr; }
  int dim() const;
  Domain domain() const;
  /// Measure the eigenfunctions are orthonormal under.
  Measure native_measure() const;
  /// Number of stored, evaluable eigenpairs.
  std::size_t count() const;
  double eigenvalue(std::size_t j) const;
  double eval(std::size_t j, const Point& x) const;
  const std::string& label(std::size_t j) const;
  std::string kind() const;
  nlohmann::json descriptor() const;

  /// sum_{i<=n} lambda_i; past the stored spectrum this extends through an
  /// eigenvalue-only tail plus an analytic remainder, clamped at trace().
  double head_sum(std::size_t n) const;
  /// sum_{i>n} lambda_i = trace() - head_sum(n), never negative.
  double tail_sum(std::size_t n) const;
  double trace() const;

  /// sum_{j<=M} lambda_j phi_j(x) phi_j(y); requires M <= count().
  double kernel_partial_sum(const Point& x, const Point& y, std::size_t M) const;

  FieldFunction eigenfunction_on(std::size_t j, const GridPtr& grid) const;
  /// Rows are phi_0..phi_{m-1} evaluated at the grid nodes.
  Eigen::MatrixXd basis_on(const GridPtr& grid, std::size_t m) const;

  /// Non-null only for Nystrom-built systems.
  const NystromSolve* nystrom() const;

private:
  std::shared_ptr<const EigenSystemImpl> impl_;
};

/// Real sine/cosine eigensystem of alpha (-laplacian + beta I)^(-gamma) on
/// the torus [0,1]^d. Requires 2*gamma > dim (trace class).
EigenSystem torus_eigensystem(double alpha, double beta, double gamma, int dim,
                              std::size_t count);

/// Sine eigensystem with zero boundary values on [0,1]^d; eigenvalues
/// alpha (beta + pi^2 |k|^2)^(-gamma), k in N^d.
EigenSystem dirichlet_box_eigensystem(double alpha, double beta, double gamma, int dim,
                                      std::size_t count);

/// Brownian-motion kernel min(s,t) on [0,1]: lambda_j = 1/((j-1/2)^2 pi^2),
/// phi_j = sqrt(2) sin((j-1/2) pi t).
EigenSystem brownian_eigensystem(std::size_t count);

/// Hermite eigensystem of exp(-|x-y|^2/(2 l^2)) under a Gaussian measure
/// with variance sigma2, restricted to [-radius, radius]. Eigenfunctions
/// are renormalized so the discrete weighted norm is 1 (norm_points nodes).
EigenSystem rbf_eigensystem_1d(double lengthscale, double sigma2, std::size_t count,
                               double radius = 1.0, int norm_points = 2048);

/// Tensor products of the 1d RBF eigenpairs, ordered by product eigenvalue.
EigenSystem rbf_eigensystem_nd(double lengthscale, double sigma2, int dim, std::size_t count,
                               double radius = 1.0, int norm_points = 2048);

using KernelFn = std::function<double(const Point&, const Point&)>;

/// Nystrom approximation from n_samples i.i.d. draws of the measure:
/// eigenvalue estimates gamma_j/N and the out-of-sample evaluator
/// phi_j(y) = (sqrt(N)/gamma_j) sum_i K(y, x_i) [u_j]_i.
EigenSystem nystrom_eigensystem(const KernelFn& kernel, int dim, Domain domain, Measure measure,
                                int n_samples, std::size_t count, std::uint64_t seed);

// Free-function forms.
double kernel_partial_sum(const EigenSystem& sys, const Point& x, const Point& y, std::size_t M);
double tail_sum(const EigenSystem& sys, std::size_t n);

/// Spectrum CSV: `rank,eigenvalue,label`.
void write_spectrum_csv(std::ostream& os, const EigenSystem& sys);

} // namespace opal

#endif
