// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/oracle.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace opal {

nlohmann::json OracleInfo::to_json() const {
  nlohmann::json j{{"equation", equation}, {"epsilon", epsilon}};
  if (grid_points > 0)
    j["grid_points"] = grid_points;
  if (steps > 0) {
    j["tau"] = tau;
    j["steps"] = steps;
  }
  if (mode_cap > 0) {
    j["mode_cap"] = mode_cap;
    if (equation == "heat-spectral")
      j["tau"] = tau;
  }
  if (cg_max_iter > 0) {
    j["cg_tol"] = cg_tol;
    j["cg_max_iter"] = cg_max_iter;
  }
  return j;
}

Oracle::Oracle(OracleInfo info, ApplyFn fn)
    : info_(std::move(info)), fn_(std::move(fn)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

FieldFunction Oracle::operator()(const FieldFunction& v) const {
  if (!fn_)
    throw std::invalid_argument("Oracle: empty oracle applied");
  counter_->fetch_add(1, std::memory_order_relaxed);
  return fn_(v);
}

void Oracle::reset_calls() const {
  if (counter_)
    counter_->store(0);
}

namespace {

void require_fd_box(const GridPtr& grid, const char* who) {
  if (!grid)
    throw std::invalid_argument(std::string(who) + ": null grid");
  if (grid->dim() != 2 || grid->domain() != Domain::Box01 ||
      grid->layout() != BoxLayout::FdLattice)
    throw std::invalid_argument(std::string(who) + ": needs a 2d Box01 FD-lattice grid");
}

// ---------------------------------------------------------------------------
// Poisson, five-point stencil, matrix-free CG on the interior unknowns.

struct PoissonWork {
  int n = 0;       // points per dim
  double h2 = 0;   // h^2
  Eigen::VectorXd u, r, p, ap;
};

// y = A x with A = -laplacian_h on interior nodes, zero Dirichlet.
void apply_fd_laplacian(const Eigen::VectorXd& x, Eigen::VectorXd& y, int n, double h2) {
  const int m = n - 2; // interior per dim
  auto at = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i >= m || j >= m)
      return 0.0;
    return x[static_cast<Eigen::Index>(i) * m + j];
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      y[static_cast<Eigen::Index>(i) * m + j] =
          (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) / h2;
}

} // namespace

FieldFunction poisson_fd_solve(const FieldFunction& f, double rel_tol) {
  require_fd_box(f.grid, "poisson_fd_solve");
  if (!f.valid())
    throw std::invalid_argument("poisson_fd_solve: invalid field");

  const int n = f.grid->points_per_dim();
  const int m = n - 2;
  const double h = f.grid->spacing();
  const double h2 = h * h;
  const long max_iter = 10L * n * n;

  Eigen::VectorXd b(static_cast<Eigen::Index>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      b[static_cast<Eigen::Index>(i) * m + j] =
          f.values[static_cast<Eigen::Index>(i + 1) * n + (j + 1)];

  FieldFunction out = zero_field(f.grid);
  const double b_norm = b.norm();
  if (b_norm == 0.0)
    return out;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  Eigen::VectorXd ap(b.size());
  double rr = r.squaredNorm();
  long it = 0;
  while (std::sqrt(rr) > rel_tol * b_norm) {
    if (it++ >= max_iter)
      throw NumericalError("poisson_fd_solve: conjugate gradients hit the iteration cap");
    apply_fd_laplacian(p, ap, n, h2);
    const double alpha = rr / p.dot(ap);
    u += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      out.values[static_cast<Eigen::Index>(i + 1) * n + (j + 1)] =
          u[static_cast<Eigen::Index>(i) * m + j];
  return out;
}

Oracle poisson_fd_oracle(const GridPtr& grid, double rel_tol) {
  require_fd_box(grid, "poisson_fd_oracle");
  OracleInfo info;
  info.equation = "poisson-fd";
  info.grid_points = grid->points_per_dim();
  info.cg_tol = rel_tol;
  info.cg_max_iter = 10L * grid->points_per_dim() * grid->points_per_dim();
  // The FD solution differs from the exact operator at discretization order;
  // the tag records the oracle as approximate without certifying a constant.
  info.epsilon = grid->spacing() * grid->spacing();
  return Oracle(info, [rel_tol](const FieldFunction& f) { return poisson_fd_solve(f, rel_tol); });
}

// ---------------------------------------------------------------------------
// Sine-basis spectral solves. The basis 2 sin(k pi x) sin(l pi y) is exactly
// orthonormal under the FD-lattice trapezoid quadrature below Nyquist, so
// analysis + synthesis is an exact discrete transform.

namespace {

int checked_mode_cap(const Grid& grid, int mode_cap, const char* who) {
  const int nyquist = grid.points_per_dim() - 2;
  if (mode_cap < 1 || mode_cap > nyquist)
    throw std::invalid_argument(std::string(who) + ": mode_cap above Nyquist (max " +
                                std::to_string(nyquist) + ")");
  return mode_cap;
}

struct SineTransform {
  GridPtr grid;
  Eigen::MatrixXd basis;      // modes x nodes
  Eigen::VectorXd lap_eigs;   // pi^2 (k^2 + l^2)

  SineTransform(const GridPtr& g, int cap) : grid(g) {
    const Eigen::Index modes = static_cast<Eigen::Index>(cap) * cap;
    basis.resize(modes, g->size());
    lap_eigs.resize(modes);
    Eigen::Index row = 0;
    for (int k = 1; k <= cap; ++k) {
      for (int l = 1; l <= cap; ++l, ++row) {
        lap_eigs[row] = M_PI * M_PI * (static_cast<double>(k) * k + static_cast<double>(l) * l);
        for (Eigen::Index i = 0; i < g->size(); ++i) {
          const Point p = g->node(i);
          basis(row, i) = 2.0 * std::sin(k * M_PI * p[0]) * std::sin(l * M_PI * p[1]);
        }
      }
    }
  }

  Eigen::VectorXd analyze(const FieldFunction& f) const {
    return basis * grid->weights().cwiseProduct(f.values);
  }

  FieldFunction synthesize(const Eigen::VectorXd& coeffs) const {
    return {grid, basis.transpose() * coeffs};
  }
};

std::shared_ptr<const SineTransform> make_transform(const GridPtr& grid, int cap,
                                                    const char* who) {
  require_fd_box(grid, who);
  return std::make_shared<const SineTransform>(grid, checked_mode_cap(*grid, cap, who));
}

} // namespace

FieldFunction poisson_spectral_solve(const FieldFunction& f, int mode_cap) {
  auto t = make_transform(f.grid, mode_cap, "poisson_spectral_solve");
  return t->synthesize(t->analyze(f).cwiseQuotient(t->lap_eigs));
}

Oracle poisson_spectral_oracle(const GridPtr& grid, int mode_cap) {
  auto t = make_transform(grid, mode_cap, "poisson_spectral_oracle");
  OracleInfo info;
  info.equation = "poisson-spectral";
  info.grid_points = grid->points_per_dim();
  info.mode_cap = mode_cap;
  return Oracle(info, [t](const FieldFunction& f) {
    if (!f.grid || !f.grid->same_layout(*t->grid))
      throw std::invalid_argument("poisson-spectral oracle: grid mismatch");
    return t->synthesize(t->analyze(f).cwiseQuotient(t->lap_eigs));
  });
}

FieldFunction heat_fd_solve(const FieldFunction& u0, double tau, int steps) {
  require_fd_box(u0.grid, "heat_fd_solve");
  if (!u0.valid())
    throw std::invalid_argument("heat_fd_solve: invalid field");
  if (steps < 1)
    throw std::invalid_argument("heat_fd_solve: steps must be >= 1");
  if (tau < 0)
    throw std::invalid_argument("heat_fd_solve: tau must be nonnegative");

  const int n = u0.grid->points_per_dim();
  const double h = u0.grid->spacing();
  const double dt = 1.0 / steps;
  const double mu = tau * dt / (h * h);
  if (mu > 0.25)
    throw NumericalError("heat_fd_solve: forward Euler unstable (tau*dt/h^2 = " +
                         std::to_string(mu) + " > 1/4)");

  Eigen::VectorXd u = u0.values;
  // Zero Dirichlet boundary throughout the march.
  for (Eigen::Index i = 0; i < u0.grid->size(); ++i)
    if (u0.grid->on_boundary(i))
      u[i] = 0.0;

  Eigen::VectorXd next = u;
  for (int s = 0; s < steps; ++s) {
    for (int i = 1; i < n - 1; ++i) {
      for (int j = 1; j < n - 1; ++j) {
        const Eigen::Index c = static_cast<Eigen::Index>(i) * n + j;
        next[c] = u[c] + mu * (u[c - n] + u[c + n] + u[c - 1] + u[c + 1] - 4.0 * u[c]);
      }
    }
    u.swap(next);
  }
  return {u0.grid, u};
}

Oracle heat_fd_oracle(const GridPtr& grid, double tau, int steps) {
  require_fd_box(grid, "heat_fd_oracle");
  const double h = grid->spacing();
  const double mu = tau / steps / (h * h);
  if (mu > 0.25)
    throw NumericalError("heat_fd_oracle: forward Euler unstable for these settings");
  OracleInfo info;
  info.equation = "heat-fd";
  info.grid_points = grid->points_per_dim();
  info.tau = tau;
  info.steps = steps;
  info.epsilon = 1.0 / steps + h * h;
  return Oracle(info,
                [tau, steps](const FieldFunction& u0) { return heat_fd_solve(u0, tau, steps); });
}

FieldFunction heat_spectral_solve(const FieldFunction& u0, double tau, int mode_cap) {
  if (tau < 0)
    throw std::invalid_argument("heat_spectral_solve: tau must be nonnegative");
  auto t = make_transform(u0.grid, mode_cap, "heat_spectral_solve");
  const Eigen::VectorXd decay = (-tau * t->lap_eigs).array().exp();
  return t->synthesize(t->analyze(u0).cwiseProduct(decay));
}

Oracle heat_spectral_oracle(const GridPtr& grid, double tau, int mode_cap) {
  if (tau < 0)
    throw std::invalid_argument("heat_spectral_oracle: tau must be nonnegative");
  auto t = make_transform(grid, mode_cap, "heat_spectral_oracle");
  auto decay = std::make_shared<const Eigen::VectorXd>((-tau * t->lap_eigs).array().exp());
  OracleInfo info;
  info.equation = "heat-spectral";
  info.grid_points = grid->points_per_dim();
  info.tau = tau;
  info.mode_cap = mode_cap;
  return Oracle(info, [t, decay](const FieldFunction& u0) {
    if (!u0.grid || !u0.grid->same_layout(*t->grid))
      throw std::invalid_argument("heat-spectral oracle: grid mismatch");
    return t->synthesize(t->analyze(u0).cwiseProduct(*decay));
  });
}

// ---------------------------------------------------------------------------
// Wrappers

namespace {

FieldFunction random_unit_field(const GridPtr& grid, std::uint64_t seed, std::uint64_t stream) {
  auto rng = seeded_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  FieldFunction q{grid, Eigen::VectorXd(grid->size())};
  for (Eigen::Index i = 0; i < grid->size(); ++i)
    q.values[i] = normal(rng);
  const double norm = l2_norm(q);
  if (norm == 0.0)
    throw NumericalError("random_unit_field: degenerate draw");
  q.values /= norm;
  return q;
}

} // namespace

Oracle noisy_oracle(const Oracle& base, double epsilon, NoiseMode mode, std::uint64_t seed,
                    const GridPtr& grid) {
  if (epsilon < 0)
    throw std::invalid_argument("noisy_oracle: epsilon must be nonnegative");
  if (!grid)
    throw std::invalid_argument("noisy_oracle: null grid");

  OracleInfo info = base.info();
  info.equation += mode == NoiseMode::FixedDirection ? "+noise-fixed" : "+noise-random";
  info.epsilon = epsilon;
  if (epsilon == 0.0)
    return Oracle(info, [base](const FieldFunction& v) { return base(v); });

  if (mode == NoiseMode::FixedDirection) {
    auto direction =
        std::make_shared<const FieldFunction>(random_unit_field(grid, seed, stream_id(1)));
    return Oracle(info, [base, epsilon, direction](const FieldFunction& v) {
      FieldFunction out = base(v);
      out.values += epsilon * direction->values;
      return out;
    });
  }
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return Oracle(info, [base, epsilon, seed, counter, grid](const FieldFunction& v) {
    FieldFunction out = base(v);
    const std::uint64_t k = counter->fetch_add(1, std::memory_order_relaxed);
    out.values += epsilon * random_unit_field(grid, seed, stream_id(2, k)).values;
    return out;
  });
}

Oracle identity_oracle() {
  OracleInfo info;
  info.equation = "identity";
  return Oracle(info, [](const FieldFunction& v) { return v; });
}

Oracle diagonal_oracle(const EigenSystem& sys, const Eigen::VectorXd& diag, const GridPtr& grid,
                       std::string tag) {
  if (!grid)
    throw std::invalid_argument("diagonal_oracle: null grid");
  if (diag.size() < 1 || static_cast<std::size_t>(diag.size()) > sys.count())
    throw std::invalid_argument("diagonal_oracle: diagonal length beyond stored spectrum");
  if (!grid_compatible(sys, *grid))
    throw std::invalid_argument("diagonal_oracle: grid incompatible with eigensystem");

  auto basis = std::make_shared<const Eigen::MatrixXd>(
      sys.basis_on(grid, static_cast<std::size_t>(diag.size())));
  auto d = std::make_shared<const Eigen::VectorXd>(diag);
  OracleInfo info;
  info.equation = std::move(tag);
  info.grid_points = grid->points_per_dim();
  return Oracle(info, [basis, d, grid](const FieldFunction& v) {
    if (!v.grid || !v.grid->same_layout(*grid))
      throw std::invalid_argument("diagonal oracle: grid mismatch");
    const Eigen::VectorXd coeffs = *basis * grid->weights().cwiseProduct(v.values);
    return FieldFunction{grid, basis->transpose() * d->cwiseProduct(coeffs)};
  });
}

Oracle hard_instance_oracle(const HardInstance& inst, const GridPtr& grid) {
  return diagonal_oracle(inst.system, inst.scale * inst.signs, grid, "hard-instance");
}

int max_mode_cap(const Grid& grid) { return grid.points_per_dim() - 2; }

} // namespace opal
