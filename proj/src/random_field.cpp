// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/random_field.hpp"

#include <cmath>

namespace opal {

CoefficientLaw CoefficientLaw::three_point(double p) {
  if (!(p > 0) || p > 1)
    throw std::invalid_argument("CoefficientLaw: three-point p must lie in (0,1]");
  return {Kind::ThreePoint, p};
}

std::string CoefficientLaw::name() const {
  return kind == Kind::StandardGaussian ? "gaussian" : "three-point";
}

bool grid_compatible(const EigenSystem& sys, const Grid& grid) {
  return grid.dim() == sys.dim() && grid.domain() == sys.domain() &&
         grid.measure().same_as(sys.native_measure());
}

KlSampler::KlSampler(EigenSystem sys, std::size_t truncation, GridPtr grid, CoefficientLaw law)
    : sys_(std::move(sys)), grid_(std::move(grid)), law_(law) {
  if (!grid_)
    throw std::invalid_argument("KlSampler: null grid");
  if (truncation > sys_.count())
    throw std::invalid_argument("KlSampler: truncation exceeds stored spectrum");
  if (!grid_compatible(sys_, *grid_))
    throw std::invalid_argument("KlSampler: grid incompatible with eigensystem");
  basis_ = sys_.basis_on(grid_, truncation);
  scale_.resize(static_cast<Eigen::Index>(truncation));
  for (std::size_t j = 0; j < truncation; ++j)
    scale_[static_cast<Eigen::Index>(j)] = std::sqrt(sys_.eigenvalue(j));
}

Eigen::VectorXd KlSampler::draw_coefficients(std::uint64_t seed, std::uint64_t index) const {
  auto rng = seeded_rng(seed, stream_id(0x6b6cu /* "kl" */, index));
  Eigen::VectorXd xi(scale_.size());
  if (law_.kind == CoefficientLaw::Kind::StandardGaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < xi.size(); ++j)
      xi[j] = normal(rng);
  } else {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double magnitude = std::sqrt(1.0 / law_.p);
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
      const double u = uniform(rng);
      if (u < law_.p / 2)
        xi[j] = -magnitude;
      else if (u < law_.p)
        xi[j] = magnitude;
      else
        xi[j] = 0.0;
    }
  }
  return xi;
}

FieldFunction KlSampler::materialize(const Eigen::VectorXd& xi) const {
  if (xi.size() != scale_.size())
    throw std::invalid_argument("KlSampler: coefficient length mismatch");
  FieldFunction out{grid_, Eigen::VectorXd(grid_->size())};
  out.values.noalias() = basis_.transpose() * scale_.cwiseProduct(xi);
  return out;
}

KLSample KlSampler::sample(std::uint64_t seed, std::uint64_t index) const {
  Eigen::VectorXd xi = draw_coefficients(seed, index);
  return {xi, materialize(xi)};
}

Eigen::VectorXd KlSampler::evaluate_at(const Eigen::VectorXd& xi,
                                       const std::vector<Point>& probes) const {
  if (xi.size() != scale_.size())
    throw std::invalid_argument("KlSampler: coefficient length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(probes.size()));
  for (std::size_t q = 0; q < probes.size(); ++q) {
    double acc = 0;
    for (Eigen::Index j = 0; j < xi.size(); ++j)
      acc += scale_[j] * xi[j] * sys_.eval(static_cast<std::size_t>(j), probes[q]);
    out[static_cast<Eigen::Index>(q)] = acc;
  }
  return out;
}

KLSample sample_kl(const EigenSystem& sys, std::size_t truncation, const GridPtr& grid,
                   CoefficientLaw law, std::uint64_t seed) {
  return KlSampler(sys, truncation, grid, law).sample(seed);
}

KlProjection kl_project(const FieldFunction& v, const EigenSystem& sys, std::size_t m) {
  if (!v.valid())
    throw std::invalid_argument("kl_project: invalid field");
  if (m > sys.count())
    throw std::invalid_argument("kl_project: m exceeds stored spectrum");
  if (!grid_compatible(sys, *v.grid))
    throw std::invalid_argument("kl_project: grid incompatible with eigensystem");

  const Eigen::MatrixXd basis = sys.basis_on(v.grid, m);
  const Eigen::VectorXd weighted = v.grid->weights().cwiseProduct(v.values);
  const Eigen::VectorXd raw = basis * weighted; // <v, phi_j>

  KlProjection out;
  out.coefficients.resize(static_cast<Eigen::Index>(m));
  Eigen::VectorXd scaled(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const double lambda = sys.eigenvalue(j);
    if (!(lambda > 0))
      throw std::invalid_argument("kl_project: nonpositive eigenvalue in requested range");
    const double root = std::sqrt(lambda);
    out.coefficients[static_cast<Eigen::Index>(j)] = raw[static_cast<Eigen::Index>(j)] / root;
    scaled[static_cast<Eigen::Index>(j)] = raw[static_cast<Eigen::Index>(j)];
  }
  out.reconstruction = FieldFunction{v.grid, basis.transpose() * scaled};
  return out;
}

HardInstance make_hard_instance(const EigenSystem& sys, std::size_t m, std::size_t n_budget,
                                double c, std::uint64_t seed) {
  if (m < 1 || n_budget < 1)
    throw std::invalid_argument("make_hard_instance: m and n_budget must be >= 1");
  if (!(c > 0))
    throw std::invalid_argument("make_hard_instance: c must be positive");
  HardInstance inst;
  inst.system = sys;
  inst.scale = c;
  inst.protected_dim = m;
  inst.sparsity_p = 1.0 / (2.0 * static_cast<double>(m) * static_cast<double>(n_budget));
  auto rng = seeded_rng(seed, stream_id(0x7369u /* "si" */));
  std::uniform_int_distribution<int> coin(0, 1);
  inst.signs.resize(static_cast<Eigen::Index>(sys.count()));
  for (Eigen::Index j = 0; j < inst.signs.size(); ++j)
    inst.signs[j] = coin(rng) == 0 ? -1.0 : 1.0;
  return inst;
}

} // namespace opal
