// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace opal {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string to_string(Domain d) {
  switch (d) {
  case Domain::Torus01:
    return "torus01";
  case Domain::Box01:
    return "box01";
  case Domain::IntervalPM1:
    return "interval_pm1";
  }
  return "?";
}

bool Measure::same_as(const Measure& other) const {
  if (kind != other.kind)
    return false;
  if (kind == Kind::GaussianDensity)
    return std::abs(sigma2 - other.sigma2) <= 1e-12 * std::max(sigma2, other.sigma2);
  return true;
}

namespace {

double gaussian_pdf(double x, double sigma2) {
  return std::exp(-x * x / (2.0 * sigma2)) / std::sqrt(2.0 * M_PI * sigma2);
}

} // namespace

Grid::Grid(int dim, int points_per_dim, Domain domain, Measure measure, BoxLayout layout)
    : dim_(dim), n_(points_per_dim), domain_(domain), measure_(measure), layout_(layout) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("Grid: dim must be 1 or 2");
  if (points_per_dim < 2)
    throw std::invalid_argument("Grid: points_per_dim must be >= 2");
  if (measure.kind == Measure::Kind::GaussianDensity) {
    if (domain != Domain::IntervalPM1)
      throw std::invalid_argument("Grid: GaussianDensity requires IntervalPM1");
    if (!(measure.sigma2 > 0))
      throw std::invalid_argument("Grid: Gaussian measure needs sigma2 > 0");
  }

  const int n = n_;
  axis_.resize(n);
  Eigen::VectorXd cell(n); // 1d cell weights, Lebesgue part
  switch (domain_) {
  case Domain::Torus01:
    h_ = 1.0 / n;
    for (int k = 0; k < n; ++k)
      axis_[k] = k * h_;
    cell.setConstant(h_);
    break;
  case Domain::Box01:
    if (layout_ == BoxLayout::FdLattice) {
      h_ = 1.0 / (n - 1);
      for (int k = 0; k < n; ++k)
        axis_[k] = k * h_;
      // Composite trapezoid; for fields vanishing on the boundary this
      // integrates the same as zero end weights while the total stays 1.
      cell.setConstant(h_);
      cell[0] = cell[n - 1] = 0.5 * h_;
    } else {
      h_ = 1.0 / n;
      for (int k = 0; k < n; ++k)
        axis_[k] = (k + 0.5) * h_;
      cell.setConstant(h_);
    }
    break;
  case Domain::IntervalPM1:
    h_ = 2.0 / n;
    for (int k = 0; k < n; ++k)
      axis_[k] = -1.0 + (k + 0.5) * h_;
    cell.setConstant(h_);
    break;
  }

  const Eigen::Index total = (dim_ == 1) ? n : Eigen::Index(n) * n;
  weights_.resize(total);
  if (dim_ == 1) {
    for (int k = 0; k < n; ++k) {
      double w = cell[k];
      if (measure_.kind == Measure::Kind::GaussianDensity)
        w *= gaussian_pdf(axis_[k], measure_.sigma2);
      weights_[k] = w;
    }
  } else {
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        double w = cell[ix] * cell[iy];
        if (measure_.kind == Measure::Kind::GaussianDensity)
          w *= gaussian_pdf(axis_[ix], measure_.sigma2) * gaussian_pdf(axis_[iy], measure_.sigma2);
        weights_[Eigen::Index(ix) * n + iy] = w;
      }
    }
  }
}

Point Grid::node(Eigen::Index i) const {
  if (dim_ == 1)
    return {axis_[i], 0.0};
  return {axis_[i / n_], axis_[i % n_]};
}

bool Grid::on_boundary(Eigen::Index i) const {
  if (domain_ != Domain::Box01 || layout_ != BoxLayout::FdLattice)
    return false;
  const int ix = static_cast<int>(dim_ == 1 ? i : i / n_);
  const int iy = static_cast<int>(dim_ == 1 ? 0 : i % n_);
  if (ix == 0 || ix == n_ - 1)
    return true;
  return dim_ == 2 && (iy == 0 || iy == n_ - 1);
}

bool Grid::same_layout(const Grid& other) const {
  return dim_ == other.dim_ && n_ == other.n_ && domain_ == other.domain_ &&
         layout_ == other.layout_ && measure_.same_as(other.measure_);
}

GridPtr make_grid(int dim, int points_per_dim, Domain domain, Measure measure, BoxLayout layout) {
  return std::make_shared<const Grid>(dim, points_per_dim, domain, measure, layout);
}

bool FieldFunction::valid() const {
  if (!grid || values.size() != grid->size())
    return false;
  return values.allFinite();
}

FieldFunction make_field(const GridPtr& grid, const std::function<double(Point)>& f) {
  if (!grid)
    throw std::invalid_argument("make_field: null grid");
  FieldFunction out{grid, Eigen::VectorXd(grid->size())};
  for (Eigen::Index i = 0; i < grid->size(); ++i)
    out.values[i] = f(grid->node(i));
  return out;
}

FieldFunction zero_field(const GridPtr& grid) {
  if (!grid)
    throw std::invalid_argument("zero_field: null grid");
  return {grid, Eigen::VectorXd::Zero(grid->size())};
}

namespace {

void check_same_grid(const FieldFunction& f, const FieldFunction& g, const char* who) {
  if (!f.grid || !g.grid)
    throw std::invalid_argument(std::string(who) + ": field without grid");
  if (f.grid.get() != g.grid.get() && !f.grid->same_layout(*g.grid))
    throw std::invalid_argument(std::string(who) + ": grid mismatch");
  if (f.values.size() != f.grid->size() || g.values.size() != g.grid->size())
    throw std::invalid_argument(std::string(who) + ": field length mismatch");
}

} // namespace

double inner_product(const FieldFunction& f, const FieldFunction& g) {
  check_same_grid(f, g, "inner_product");
  return f.values.cwiseProduct(g.values).dot(f.grid->weights());
}

double l2_norm_sq(const FieldFunction& f) { return inner_product(f, f); }

double l2_norm(const FieldFunction& f) { return std::sqrt(std::max(0.0, l2_norm_sq(f))); }

void write_field_csv(std::ostream& os, const FieldFunction& f) {
  if (!f.valid())
    throw std::invalid_argument("write_field_csv: invalid field");
  const bool two_d = f.grid->dim() == 2;
  os << (two_d ? "x,y,value\n" : "x,value\n");
  for (Eigen::Index i = 0; i < f.grid->size(); ++i) {
    const Point p = f.grid->node(i);
    os << fmt_g(p[0]);
    if (two_d)
      os << ',' << fmt_g(p[1]);
    os << ',' << fmt_g(f.values[i]) << '\n';
  }
}

FieldFunction read_field_csv(std::istream& is, const GridPtr& grid) {
  if (!grid)
    throw std::invalid_argument("read_field_csv: null grid");
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("read_field_csv: empty input");
  const int expected_cols = grid->dim() + 1;
  FieldFunction out{grid, Eigen::VectorXd(grid->size())};
  Eigen::Index row = 0;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    if (row >= grid->size())
      throw std::invalid_argument("read_field_csv: more rows than grid nodes");
    std::stringstream ss(line);
    std::string tok;
    double value = 0;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      value = std::stod(tok);
      ++col;
    }
    if (col != expected_cols)
      throw std::invalid_argument("read_field_csv: wrong column count");
    out.values[row++] = value;
  }
  if (row != grid->size())
    throw std::invalid_argument("read_field_csv: row count does not match grid");
  if (!out.valid())
    throw std::invalid_argument("read_field_csv: non-finite values");
  return out;
}

} // namespace opal
