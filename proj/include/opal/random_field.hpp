// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_RANDOM_FIELD_HPP
#define OPAL_RANDOM_FIELD_HPP

#include <cstdint>
#include <vector>

#include "opal/eigensystem.hpp"
#include "opal/grid.hpp"

namespace opal {

/// Law of the KL coefficients xi_j: standard Gaussian, or the sparse
/// three-point law taking +-sqrt(1/p) with probability p/2 each and 0
/// otherwise (mean 0, variance 1 for both).
struct CoefficientLaw {
  enum class Kind { StandardGaussian, ThreePoint };
  Kind kind = Kind::StandardGaussian;
  double p = 0.5;

  static CoefficientLaw gaussian() { return {}; }
  static CoefficientLaw three_point(double p);
  std::string name() const;
};

/// A truncated Karhunen-Loeve draw: coefficients and the realized field
/// v = sum_j sqrt(lambda_j) xi_j phi_j on a grid.
struct KLSample {
  Eigen::VectorXd coefficients;
  FieldFunction field;
};

/// Reusable sampler; precomputes the basis-on-grid matrix so repeated draws
/// are matrix-vector products. Sampling is pure given (seed, index).
class KlSampler {
public:
  KlSampler(EigenSystem sys, std::size_t truncation, GridPtr grid, CoefficientLaw law);

  std::size_t truncation() const { return scale_.size(); }
  const GridPtr& grid() const { return grid_; }
  const EigenSystem& system() const { return sys_; }
  const CoefficientLaw& law() const { return law_; }

  Eigen::VectorXd draw_coefficients(std::uint64_t seed, std::uint64_t index = 0) const;
  FieldFunction materialize(const Eigen::VectorXd& xi) const;
  KLSample sample(std::uint64_t seed, std::uint64_t index = 0) const;

  /// Field values at arbitrary probe points for given coefficients.
  Eigen::VectorXd evaluate_at(const Eigen::VectorXd& xi, const std::vector<Point>& probes) const;

private:
  EigenSystem sys_;
  GridPtr grid_;
  CoefficientLaw law_;
  Eigen::MatrixXd basis_;  // truncation x nodes
  Eigen::VectorXd scale_;  // sqrt(lambda_j)
};

/// One-shot form of the sampler.
KLSample sample_kl(const EigenSystem& sys, std::size_t truncation, const GridPtr& grid,
                   CoefficientLaw law, std::uint64_t seed);

struct KlProjection {
  Eigen::VectorXd coefficients;  // <v, phi_j> / sqrt(lambda_j), j < m
  FieldFunction reconstruction;  // Pi_m(v)
};

/// Quadrature projection of a field onto the first m eigenfunctions.
KlProjection kl_project(const FieldFunction& v, const EigenSystem& sys, std::size_t m);

/// The hard construction behind the passive lower bound: a diagonal
/// operator F = c sum_j sign_j phi_j (x) phi_j paired with the sparse
/// three-point input law with p = 1/(2 m n).
struct HardInstance {
  EigenSystem system;
  Eigen::VectorXd signs;      // +-1 per stored eigenpair
  double scale = 1.0;         // c; equals the operator norm
  double sparsity_p = 0.5;    // 1/(2 m n)
  std::size_t protected_dim = 1;

  double op_norm() const { return scale; }
  CoefficientLaw law() const { return CoefficientLaw::three_point(sparsity_p); }
};

HardInstance make_hard_instance(const EigenSystem& sys, std::size_t m, std::size_t n_budget,
                                double c, std::uint64_t seed);

/// True when the grid carries the system's domain, dimension, and measure.
bool grid_compatible(const EigenSystem& sys, const Grid& grid);

} // namespace opal

#endif
