// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_ORACLE_HPP
#define OPAL_ORACLE_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "opal/grid.hpp"
#include "opal/random_field.hpp"

namespace opal {

/// Serializable description of an oracle; embedded in experiment manifests.
struct OracleInfo {
  std::string equation;   // "poisson-fd", "heat-spectral", "identity", ...
  int grid_points = 0;    // points per dimension
  double tau = 0.0;       // heat diffusivity
  int steps = 0;          // heat time steps
  int mode_cap = 0;       // spectral truncation
  double epsilon = 0.0;   // accuracy tag; 0 marks a perfect oracle
  double cg_tol = 0.0;    // Poisson FD relative residual
  long cg_max_iter = 0;

  nlohmann::json to_json() const;
};

/// A map FieldFunction -> FieldFunction with an accuracy tag. Applications
/// are counted (shared atomic) so experiments can assert their oracle-call
/// budgets. Copies share the underlying oracle and its counter.
class Oracle {
public:
  using ApplyFn = std::function<FieldFunction(const FieldFunction&)>;

  Oracle() = default;
  Oracle(OracleInfo info, ApplyFn fn);

  FieldFunction operator()(const FieldFunction& v) const;

  const OracleInfo& info() const { return info_; }
  double epsilon() const { return info_.epsilon; }
  std::uint64_t calls() const { return counter_ ? counter_->load() : 0; }
  void reset_calls() const;
  bool valid() const { return static_cast<bool>(fn_); }

private:
  OracleInfo info_;
  ApplyFn fn_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

// --- Poisson -nabla^2 u = f on [0,1]^2, zero Dirichlet boundary ------------

/// Five-point finite differences, matrix-free conjugate gradients.
FieldFunction poisson_fd_solve(const FieldFunction& f, double rel_tol = 1e-10);
Oracle poisson_fd_oracle(const GridPtr& grid, double rel_tol = 1e-10);

/// Exact diagonal solve in the Dirichlet sine basis up to mode_cap per axis.
FieldFunction poisson_spectral_solve(const FieldFunction& f, int mode_cap);
Oracle poisson_spectral_oracle(const GridPtr& grid, int mode_cap);

// --- Heat du/dt = tau nabla^2 u on [0,1]^2, t in [0,1], zero boundary ------

/// Forward Euler; refuses to run when tau/steps violates the stability
/// condition tau*dt/h^2 <= 1/4.
FieldFunction heat_fd_solve(const FieldFunction& u0, double tau, int steps);
Oracle heat_fd_oracle(const GridPtr& grid, double tau, int steps);

/// Exact solution operator exp(tau nabla^2) in the sine basis.
FieldFunction heat_spectral_solve(const FieldFunction& u0, double tau, int mode_cap);
Oracle heat_spectral_oracle(const GridPtr& grid, double tau, int mode_cap);

// --- Wrappers ---------------------------------------------------------------

enum class NoiseMode { FixedDirection, RandomUnit };

/// Degrades a base oracle to accuracy epsilon by adding an L2-norm-epsilon
/// perturbation: a fixed unit field, or a fresh random unit field per call
/// (derived from the seed and a call counter).
Oracle noisy_oracle(const Oracle& base, double epsilon, NoiseMode mode, std::uint64_t seed,
                    const GridPtr& grid);

Oracle identity_oracle();

/// F v = sum_j d_j <v, phi_j> phi_j over the first `terms` eigenpairs.
Oracle diagonal_oracle(const EigenSystem& sys, const Eigen::VectorXd& diag, const GridPtr& grid,
                       std::string tag = "diagonal");

/// Perfect oracle of the hard instance's signed diagonal operator.
Oracle hard_instance_oracle(const HardInstance& inst, const GridPtr& grid);

/// Largest Laplacian sine mode representable on a Box01 FD-lattice grid.
int max_mode_cap(const Grid& grid);

} // namespace opal

#endif
