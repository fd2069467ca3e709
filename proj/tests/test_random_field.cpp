// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "opal/oracle.hpp"
#include "opal/random_field.hpp"

using namespace opal;

TEST_CASE("empty expansion gives the zero field") {
  const EigenSystem sys = brownian_eigensystem(8);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  const KLSample s = sample_kl(sys, 0, grid, CoefficientLaw::gaussian(), 3);
  CHECK(s.coefficients.size() == 0);
  CHECK(l2_norm_sq(s.field) == 0.0);
}

TEST_CASE("sampler rejects incompatible inputs") {
  const EigenSystem sys = brownian_eigensystem(8);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  CHECK_THROWS_AS(sample_kl(sys, 9, grid, CoefficientLaw::gaussian(), 3), std::invalid_argument);
  const GridPtr torus = make_grid(1, 64, Domain::Torus01);
  CHECK_THROWS_AS(sample_kl(sys, 4, torus, CoefficientLaw::gaussian(), 3), std::invalid_argument);
  const GridPtr plane = make_grid(2, 16, Domain::Box01);
  CHECK_THROWS_AS(sample_kl(sys, 4, plane, CoefficientLaw::gaussian(), 3), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientLaw::three_point(0.0), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientLaw::three_point(1.5), std::invalid_argument);
}

TEST_CASE("sampling is reproducible and stream-split") {
  const EigenSystem sys = brownian_eigensystem(32);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  const KlSampler sampler(sys, 32, grid, CoefficientLaw::gaussian());
  const KLSample a = sampler.sample(5, 0);
  const KLSample b = sampler.sample(5, 0);
  const KLSample c = sampler.sample(5, 1);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.coefficients - c.coefficients).cwiseAbs().maxCoeff() > 0.0);
  // Field equals the expansion evaluated at the nodes.
  Eigen::VectorXd manual(grid->size());
  for (Eigen::Index i = 0; i < grid->size(); ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < 32; ++j)
      acc += std::sqrt(sys.eigenvalue(j)) * a.coefficients[static_cast<Eigen::Index>(j)] *
             sys.eval(j, grid->node(i));
    manual[i] = acc;
  }
  CHECK((a.field.values - manual).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kl variance at the endpoint matches the kernel") {
  // Monte Carlo against the Mercer value K(1,1) = min(1,1) = 1.
  const EigenSystem sys = brownian_eigensystem(200);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  const KlSampler sampler(sys, 200, grid, CoefficientLaw::gaussian());
  const std::vector<Point> probes = {{1.0, 0.0}};
  const int S = 5000;
  double sum = 0, sum_sq = 0;
  for (int s = 0; s < S; ++s) {
    const double v = sampler.evaluate_at(sampler.draw_coefficients(42, s), probes)[0];
    sum += v;
    sum_sq += v * v;
  }
  const double var = sum_sq / S - (sum / S) * (sum / S);
  CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("three-point coefficients take the stated values") {
  const EigenSystem sys = brownian_eigensystem(16);
  const GridPtr grid = make_grid(1, 32, Domain::Box01);
  const KlSampler sampler(sys, 16, grid, CoefficientLaw::three_point(0.5));
  const double mag = std::sqrt(2.0);
  long zeros = 0, total = 0;
  double sum = 0, sum_sq = 0;
  const int S = 10000 / 16 + 1;
  for (int s = 0; s < S; ++s) {
    const Eigen::VectorXd xi = sampler.draw_coefficients(11, s);
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
      const double v = xi[j];
      CHECK((v == 0.0 || std::abs(std::abs(v) - mag) < 1e-12));
      zeros += v == 0.0 ? 1 : 0;
      ++total;
      sum += v;
      sum_sq += v * v;
    }
  }
  const double mean = sum / total;
  const double second = sum_sq / total;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(total)));
  CHECK(std::abs(second - 1.0) < 0.1);
  // Zero fraction within 3 standard errors of 1 - p.
  const double f = static_cast<double>(zeros) / static_cast<double>(total);
  const double se = std::sqrt(0.5 * 0.5 / static_cast<double>(total));
  CHECK(std::abs(f - 0.5) < 3.0 * se);
}

TEST_CASE("kl samples are mean zero") {
  const EigenSystem sys = brownian_eigensystem(64);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  for (CoefficientLaw law : {CoefficientLaw::gaussian(), CoefficientLaw::three_point(0.5)}) {
    const KlSampler sampler(sys, 64, grid, law);
    std::vector<Point> probes;
    for (int q = 1; q <= 10; ++q)
      probes.push_back({q / 10.0, 0.0});
    const int S = 10000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(10);
    for (int s = 0; s < S; ++s)
      acc += sampler.evaluate_at(sampler.draw_coefficients(17, s), probes);
    for (int q = 0; q < 10; ++q) {
      const double kxx = sys.kernel_partial_sum(probes[q], probes[q], 64);
      CHECK(std::abs(acc[q] / S) <= 4.0 * std::sqrt(kxx / S));
    }
  }
}

TEST_CASE("empirical covariance matches the mercer partial sum") {
  const EigenSystem sys = brownian_eigensystem(64);
  const GridPtr grid = make_grid(1, 64, Domain::Box01);
  std::vector<Point> probes;
  for (int q = 0; q < 10; ++q)
    probes.push_back({0.25 + 0.05 * q, 0.0});
  for (CoefficientLaw law : {CoefficientLaw::gaussian(), CoefficientLaw::three_point(0.5)}) {
    const KlSampler sampler(sys, 64, grid, law);
    const int S = 10000;
    Eigen::MatrixXd vals(S, 10);
    for (int s = 0; s < S; ++s)
      vals.row(s) = sampler.evaluate_at(sampler.draw_coefficients(23, s), probes).transpose();
    for (int a = 0; a < 10; a += 3) {
      for (int b = a; b < 10; b += 2) {
        const double emp = vals.col(a).dot(vals.col(b)) / S;
        const double ref = sys.kernel_partial_sum(probes[a], probes[b], 64);
        const double kaa = sys.kernel_partial_sum(probes[a], probes[a], 64);
        if (std::abs(ref) > 0.05 * kaa)
          CHECK(std::abs(emp - ref) < 0.1 * std::abs(ref));
      }
    }
  }
}

TEST_CASE("projection round trips") {
  const EigenSystem sys = brownian_eigensystem(50);
  const GridPtr grid = make_grid(1, 256, Domain::Box01);

  // phi_1 projects to (1/sqrt(lambda_1), 0, 0, ...).
  const FieldFunction phi1 = sys.eigenfunction_on(0, grid);
  const KlProjection p1 = kl_project(phi1, sys, 5);
  CHECK(p1.coefficients[0] == doctest::Approx(1.0 / std::sqrt(sys.eigenvalue(0))).epsilon(1e-9));
  for (int j = 1; j < 5; ++j)
    CHECK(std::abs(p1.coefficients[j]) < 1e-9);

  // A truncated sample is recovered exactly below Nyquist.
  const KlSampler sampler(sys, 50, grid, CoefficientLaw::gaussian());
  const KLSample s = sampler.sample(9, 4);
  const KlProjection back = kl_project(s.field, sys, 50);
  CHECK((back.coefficients - s.coefficients).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((back.reconstruction.values - s.field.values).cwiseAbs().maxCoeff() < 1e-8);

  const KlProjection zero = kl_project(zero_field(grid), sys, 10);
  CHECK(zero.coefficients.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(kl_project(phi1, sys, 51), std::invalid_argument);
}

TEST_CASE("truncation error is monotone and bounded by the tail sum") {
  const EigenSystem sys = brownian_eigensystem(64);
  const GridPtr grid = make_grid(1, 256, Domain::Box01);
  const KlSampler sampler(sys, 64, grid, CoefficientLaw::gaussian());
  const KLSample s = sampler.sample(31, 2);
  const double max_xi_sq = s.coefficients.cwiseAbs2().maxCoeff();
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m <= 64; m += 8) {
    const KlProjection proj = kl_project(s.field, sys, m);
    const FieldFunction diff{grid, s.field.values - proj.reconstruction.values};
    const double err = l2_norm_sq(diff);
    CHECK(err <= prev + 1e-12);
    CHECK(err <= sys.tail_sum(m) * max_xi_sq + 1e-9);
    prev = err;
  }
}

TEST_CASE("hard instance construction and diagonal action") {
  const EigenSystem sys = brownian_eigensystem(32);
  const HardInstance inst = make_hard_instance(sys, 1, 1, 1.0, 5);
  CHECK(inst.sparsity_p == doctest::Approx(0.5)); // p = 1/(2 m n)
  CHECK(inst.op_norm() == 1.0);

  const HardInstance big = make_hard_instance(sys, 10, 20, 2.0, 5);
  CHECK(big.sparsity_p == doctest::Approx(1.0 / 400.0));
  for (Eigen::Index j = 0; j < big.signs.size(); ++j)
    CHECK(std::abs(big.signs[j]) == 1.0);

  // F sigma phi_k = c sigma_k phi_k.
  const GridPtr grid = make_grid(1, 128, Domain::Box01);
  const Oracle oracle = hard_instance_oracle(big, grid);
  for (std::size_t k : {std::size_t(0), std::size_t(3), std::size_t(17)}) {
    const FieldFunction phi = big.system.eigenfunction_on(k, grid);
    const FieldFunction out = oracle(phi);
    const FieldFunction expect{grid,
                               2.0 * big.signs[static_cast<Eigen::Index>(k)] * phi.values};
    CHECK((out.values - expect.values).cwiseAbs().maxCoeff() < 1e-8);
  }

  CHECK_THROWS_AS(make_hard_instance(sys, 0, 1, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_hard_instance(sys, 1, 1, 0.0, 5), std::invalid_argument);
}
