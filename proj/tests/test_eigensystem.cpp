// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "opal/eigensystem.hpp"

using namespace opal;

namespace {

// Largest orthonormality defect over the first m pairs under the grid
// quadrature.
double orthonormality_defect(const EigenSystem& sys, const GridPtr& grid, std::size_t m) {
  const Eigen::MatrixXd B = sys.basis_on(grid, m);
  const Eigen::MatrixXd gram = B * grid->weights().asDiagonal() * B.transpose();
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

// Relative Fredholm residual max_j |Q[K(.,x) phi_j] - lambda_j phi_j| /
// |lambda_j phi_j| on the grid, for j < m, with the kernel given explicitly.
double fredholm_residual(const EigenSystem& sys, const GridPtr& grid, const KernelFn& kernel,
                         std::size_t m) {
  const Eigen::Index nn = grid->size();
  Eigen::MatrixXd K(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < nn; ++j)
      K(i, j) = kernel(grid->node(i), grid->node(j));
  const Eigen::MatrixXd B = sys.basis_on(grid, m);
  double worst = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::VectorXd phi = B.row(static_cast<Eigen::Index>(j)).transpose();
    const Eigen::VectorXd applied = K * grid->weights().cwiseProduct(phi);
    const Eigen::VectorXd target = sys.eigenvalue(j) * phi;
    worst = std::max(worst, (applied - target).norm() / target.norm());
  }
  return worst;
}

} // namespace

TEST_CASE("torus spectrum values") {
  // lambda_m = alpha (beta + 4 pi^2 |m|^2)^-gamma by direct substitution.
  const EigenSystem one = torus_eigensystem(625, 25, 2, 1, 1);
  CHECK(one.eigenvalue(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.eval(0, {0.37, 0.0}) == doctest::Approx(1.0)); // constant eigenfunction

  const EigenSystem three = torus_eigensystem(625, 25, 2, 1, 3);
  const double expected = 625.0 * std::pow(25.0 + 4.0 * M_PI * M_PI, -2.0);
  CHECK(three.eigenvalue(1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(three.eigenvalue(2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.15033).epsilon(1e-4));
  CHECK(three.label(1) == "c1");
  CHECK(three.label(2) == "s1");
}

TEST_CASE("torus trace-class precondition") {
  CHECK_THROWS_AS(torus_eigensystem(1, 1, 1, 2, 1), std::invalid_argument); // 2g = d
  CHECK_THROWS_AS(torus_eigensystem(1, 1, 0.4, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(torus_eigensystem(625, 25, 2, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(torus_eigensystem(-1, 25, 2, 1, 1), std::invalid_argument);
}

TEST_CASE("dirichlet box spectrum values") {
  const EigenSystem top = dirichlet_box_eigensystem(2500, 1, 2, 2, 1);
  const double expected = 2500.0 * std::pow(1.0 + 2.0 * M_PI * M_PI, -2.0);
  CHECK(top.eigenvalue(0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(5.8124).epsilon(1e-3));
  // eigenfunction 2 sin(pi x) sin(pi y)
  CHECK(top.eval(0, {0.5, 0.5}) == doctest::Approx(2.0).epsilon(1e-12));

  const EigenSystem sys = dirichlet_box_eigensystem(1, 1, 1.5, 2, 3);
  CHECK(sys.eigenvalue(0) ==
        doctest::Approx(std::pow(1.0 + 2.0 * M_PI * M_PI, -1.5)).epsilon(1e-12));
  const double second = std::pow(1.0 + 5.0 * M_PI * M_PI, -1.5);
  CHECK(sys.eigenvalue(1) == doctest::Approx(second).epsilon(1e-12));
  CHECK(sys.eigenvalue(2) == doctest::Approx(second).epsilon(1e-12));
  CHECK(sys.label(1) == "S1*S2"); // lexicographic tie break
  CHECK(sys.label(2) == "S2*S1");

  CHECK_THROWS_AS(dirichlet_box_eigensystem(1, 1, 0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("brownian eigenpairs") {
  const EigenSystem sys = brownian_eigensystem(2);
  CHECK(sys.eigenvalue(0) == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-12));
  CHECK(sys.eigenvalue(1) == doctest::Approx(4.0 / (9.0 * M_PI * M_PI)).epsilon(1e-12));
  CHECK(sys.eigenvalue(0) == doctest::Approx(0.405285).epsilon(1e-5));
  CHECK(sys.eigenvalue(1) == doctest::Approx(0.0450316).epsilon(1e-5));
  CHECK(sys.eval(0, {1.0, 0.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(brownian_eigensystem(0), std::invalid_argument);
}

TEST_CASE("brownian trace converges to 1/2") {
  // Direct 1e5-term summation against the closed-form trace.
  double acc = 0;
  for (long j = 1; j <= 100000; ++j)
    acc += 1.0 / ((j - 0.5) * (j - 0.5) * M_PI * M_PI);
  CHECK(std::abs(acc - 0.5) < 1e-3);
  CHECK(brownian_eigensystem(4).trace() == doctest::Approx(0.5));
}

TEST_CASE("brownian tail sums") {
  const EigenSystem sys = brownian_eigensystem(64);
  CHECK(std::abs(sys.tail_sum(0) - 0.5) < 1e-3);
  CHECK(std::abs(sys.tail_sum(1) - (0.5 - 4.0 / (M_PI * M_PI))) < 1e-3);
  CHECK(sys.tail_sum(1) == doctest::Approx(0.0947153).epsilon(1e-3));
}

TEST_CASE("tail sums decrease to zero") {
  const EigenSystem torus = torus_eigensystem(625, 25, 2, 1, 128);
  const EigenSystem box = dirichlet_box_eigensystem(2500, 1, 2, 2, 128);
  const EigenSystem brown = brownian_eigensystem(128);
  const EigenSystem rbf = rbf_eigensystem_1d(1.0, 1.0, 64);
  for (const EigenSystem* sys : {&torus, &box, &brown, &rbf}) {
    double prev = sys->tail_sum(0);
    CHECK(prev == doctest::Approx(sys->trace()));
    for (std::size_t n = 1; n <= sys->count(); n *= 2) {
      const double cur = sys->tail_sum(n);
      CHECK(cur <= prev + 1e-15);
      CHECK(cur >= 0.0);
      prev = cur;
    }
    CHECK(sys->tail_sum(sys->count()) < 0.05 * sys->trace());
  }
}

TEST_CASE("rbf closed-form eigenvalues") {
  const RbfEigParams p = RbfEigParams::from(1.0, 1.0);
  CHECK(p.a == doctest::Approx(0.25));
  CHECK(p.b == doctest::Approx(0.5));
  CHECK(p.c == doctest::Approx(std::sqrt(0.3125)).epsilon(1e-12));
  CHECK(p.c == doctest::Approx(0.559017).epsilon(1e-5));

  const EigenSystem sys = rbf_eigensystem_1d(1.0, 1.0, 8);
  CHECK(sys.eigenvalue(0) == doctest::Approx(0.618034).epsilon(1e-5));
  CHECK(sys.eigenvalue(1) == doctest::Approx(0.236068).epsilon(1e-5));
  // lambda_j <= (b/(a+b+c))^j
  for (std::size_t j = 0; j < sys.count(); ++j)
    CHECK(sys.eigenvalue(j) <= std::pow(p.ratio(), static_cast<double>(j)) + 1e-15);

  CHECK_THROWS_AS(rbf_eigensystem_1d(0.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(rbf_eigensystem_1d(1.0, -1.0, 4), std::invalid_argument);
}

TEST_CASE("rbf tensor products") {
  const EigenSystem one = rbf_eigensystem_1d(1.0, 1.0, 6);
  const EigenSystem two = rbf_eigensystem_nd(1.0, 1.0, 2, 8);
  CHECK(two.eigenvalue(0) == doctest::Approx(one.eigenvalue(0) * one.eigenvalue(0)));
  CHECK(two.eigenvalue(1) == doctest::Approx(one.eigenvalue(0) * one.eigenvalue(1)));
  CHECK(two.eigenvalue(1) == doctest::Approx(0.145898).epsilon(1e-5));
  CHECK(two.eigenvalue(2) == doctest::Approx(two.eigenvalue(1))); // multiplicity 2
  CHECK(two.eval(0, {0.3, -0.2}) ==
        doctest::Approx(one.eval(0, {0.3, 0.0}) * one.eval(0, {-0.2, 0.0})).epsilon(1e-10));

  // dim = 1 degenerates to the 1d system.
  const EigenSystem degenerate = rbf_eigensystem_nd(1.0, 1.0, 1, 6);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(degenerate.eigenvalue(j) == doctest::Approx(one.eigenvalue(j)));
    CHECK(degenerate.eval(j, {0.41, 0.0}) == doctest::Approx(one.eval(j, {0.41, 0.0})));
  }
}

TEST_CASE("orthonormality of the analytic systems on native grids") {
  const GridPtr line = make_grid(1, 256, Domain::Torus01);
  CHECK(orthonormality_defect(torus_eigensystem(625, 25, 2, 1, 50), line, 50) < 1e-8);

  const GridPtr plane = make_grid(2, 64, Domain::Torus01);
  CHECK(orthonormality_defect(torus_eigensystem(625, 25, 2, 2, 50), plane, 50) < 1e-8);

  const GridPtr box = make_grid(2, 64, Domain::Box01);
  CHECK(orthonormality_defect(dirichlet_box_eigensystem(2500, 1, 2, 2, 50), box, 50) < 1e-8);

  const GridPtr unit = make_grid(1, 256, Domain::Box01);
  CHECK(orthonormality_defect(brownian_eigensystem(50), unit, 50) < 1e-8);
}

TEST_CASE("rbf orthonormality under the weighted measure") {
  // A small sigma keeps the Gaussian mass and the Hermite turning points
  // inside [-1,1]; the short lengthscale slows the eigenvalue decay so the
  // high orders stay above roundoff.
  const double sigma2 = 0.02;
  const EigenSystem sys = rbf_eigensystem_1d(0.25, sigma2, 12);
  const GridPtr grid = make_grid(1, 1024, Domain::IntervalPM1, Measure::gaussian(sigma2));
  CHECK(orthonormality_defect(sys, grid, 12) < 1e-3);
}

TEST_CASE("fredholm residuals of brownian, torus, and rbf kernels") {
  const GridPtr unit = make_grid(1, 256, Domain::Box01);
  const KernelFn brownian_kernel = [](const Point& a, const Point& b) {
    return std::min(a[0], b[0]);
  };
  CHECK(fredholm_residual(brownian_eigensystem(10), unit, brownian_kernel, 10) < 1e-2);

  // The torus kernel through its own Mercer sum with a long truncation.
  const EigenSystem torus_long = torus_eigensystem(625, 25, 2, 1, 1001);
  const KernelFn torus_kernel = [&](const Point& a, const Point& b) {
    return torus_long.kernel_partial_sum(a, b, torus_long.count());
  };
  const GridPtr circle = make_grid(1, 256, Domain::Torus01);
  CHECK(fredholm_residual(torus_eigensystem(625, 25, 2, 1, 10), circle, torus_kernel, 10) < 1e-2);

  const double sigma2 = 0.02, ell = 0.25;
  const KernelFn rbf_kernel = [ell](const Point& a, const Point& b) {
    const double d = a[0] - b[0];
    return std::exp(-d * d / (2.0 * ell * ell));
  };
  const GridPtr weighted = make_grid(1, 1024, Domain::IntervalPM1, Measure::gaussian(sigma2));
  CHECK(fredholm_residual(rbf_eigensystem_1d(ell, sigma2, 10), weighted, rbf_kernel, 10) < 1e-2);
}

TEST_CASE("torus multiplicity structure in two dimensions") {
  const EigenSystem sys = torus_eigensystem(625, 25, 2, 2, 100);
  // Group stored members by eigenvalue; each |j|^2 class carries all sign
  // patterns of its indices at equal eigenvalue.
  std::map<long, int> class_size;
  for (std::size_t j = 0; j < sys.count(); ++j) {
    const double l = sys.eigenvalue(j);
    const double norm2 = std::pow(625.0 / l, 1.0 / 2.0);
    const long key = std::lround((norm2 - 25.0) / (4.0 * M_PI * M_PI));
    class_size[key]++;
  }
  CHECK(class_size[0] == 1);
  CHECK(class_size[1] == 4);  // (1,0),(0,1) x {cos,sin}
  CHECK(class_size[2] == 4);  // (1,1) x {cc,cs,sc,ss}
  CHECK(class_size[4] == 4);  // (2,0),(0,2)
  CHECK(class_size[5] == 8);  // (1,2),(2,1)
  // Eigenvalue depends on the index only through |j|^2.
  for (std::size_t j = 1; j < sys.count(); ++j)
    CHECK(sys.eigenvalue(j) <= sys.eigenvalue(j - 1) + 1e-15);
}

TEST_CASE("mercer partial sums") {
  const EigenSystem sys = brownian_eigensystem(1000);
  CHECK(sys.kernel_partial_sum({0.5, 0}, {0.5, 0}, 0) == 0.0);
  CHECK(std::abs(sys.kernel_partial_sum({0.5, 0}, {0.5, 0}, 1000) - 0.5) < 1e-3);
  CHECK(std::abs(sys.kernel_partial_sum({0.25, 0}, {0.75, 0}, 1000) - 0.25) < 1e-3);
  CHECK_THROWS_AS(sys.kernel_partial_sum({0.5, 0}, {0.5, 0}, 1001), std::invalid_argument);

  // Nondecreasing in M on the diagonal.
  double prev = 0;
  for (std::size_t M = 0; M <= 64; M += 8) {
    const double cur = sys.kernel_partial_sum({0.3, 0}, {0.3, 0}, M);
    CHECK(cur >= prev - 1e-15);
    prev = cur;
  }
}

TEST_CASE("nystrom recovers analytic spectra") {
  // RBF under the standard Gaussian measure; analytic oracle from the
  // closed-form 1d system.
  const KernelFn rbf = [](const Point& a, const Point& b) {
    const double d = a[0] - b[0];
    return std::exp(-d * d / 2.0);
  };
  const EigenSystem approx = nystrom_eigensystem(rbf, 1, Domain::IntervalPM1,
                                                 Measure::gaussian(1.0), 1500, 5, 99);
  const EigenSystem exact = rbf_eigensystem_1d(1.0, 1.0, 5);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(std::abs(approx.eigenvalue(j) - exact.eigenvalue(j)) < 0.05 * exact.eigenvalue(j));

  const KernelFn brownian = [](const Point& a, const Point& b) {
    return std::min(a[0], b[0]);
  };
  const EigenSystem approx_b =
      nystrom_eigensystem(brownian, 1, Domain::Box01, Measure::lebesgue(), 1500, 5, 7);
  CHECK(std::abs(approx_b.eigenvalue(0) - 4.0 / (M_PI * M_PI)) < 0.05 * 4.0 / (M_PI * M_PI));

  // Out-of-sample evaluator is orthonormal in the empirical measure by
  // construction; check it approximates the analytic eigenfunction shape.
  const NystromSolve* solve = approx_b.nystrom();
  REQUIRE(solve != nullptr);
  CHECK(solve->gammas.size() == 5);
  const Eigen::MatrixXd gram = solve->top_vectors.transpose() * solve->top_vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("nystrom degenerate and error cases") {
  const KernelFn zero = [](const Point&, const Point&) { return 0.0; };
  const EigenSystem z =
      nystrom_eigensystem(zero, 1, Domain::Box01, Measure::lebesgue(), 64, 4, 1);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(z.eigenvalue(j) == 0.0);
    CHECK(z.eval(j, {0.5, 0}) == 0.0);
  }

  const KernelFn indefinite = [](const Point& a, const Point& b) { return a[0] + b[0]; };
  CHECK_THROWS_AS(
      nystrom_eigensystem(indefinite, 1, Domain::Box01, Measure::lebesgue(), 256, 2, 1),
      NumericalError);

  const KernelFn ok = [](const Point& a, const Point& b) {
    return std::exp(-std::abs(a[0] - b[0]));
  };
  CHECK_THROWS_AS(nystrom_eigensystem(ok, 1, Domain::Box01, Measure::lebesgue(), 4, 8, 1),
                  std::invalid_argument);
}

TEST_CASE("spectrum csv") {
  const EigenSystem sys = brownian_eigensystem(3);
  std::stringstream ss;
  write_spectrum_csv(ss, sys);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "rank,eigenvalue,label");
  std::getline(ss, line);
  CHECK(line.substr(0, 2) == "1,");
  CHECK(line.find("b1") != std::string::npos);
}
