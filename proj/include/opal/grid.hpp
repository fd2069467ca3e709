// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_GRID_HPP
#define OPAL_GRID_HPP

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include "opal/common.hpp"

namespace opal {

enum class Domain {
  Torus01,     // periodic [0,1]^d
  Box01,       // closed [0,1]^d
  IntervalPM1, // [-1,1]^d
};

std::string to_string(Domain d);

/// Node layout for Box01 grids. FdLattice includes the boundary nodes
/// (finite-difference stencils need them); CellMidpoints places nodes at
/// interior cell centers.
enum class BoxLayout { FdLattice, CellMidpoints };

/// Base measure realized through the quadrature weights.
struct Measure {
  enum class Kind { Lebesgue, GaussianDensity };
  Kind kind = Kind::Lebesgue;
  double sigma2 = 1.0; // GaussianDensity only, mean 0

  static Measure lebesgue() { return {}; }
  static Measure gaussian(double sigma2) { return {Kind::GaussianDensity, sigma2}; }
  bool same_as(const Measure& other) const;
};

/// Uniform tensor-product grid with per-node quadrature weights
/// (cell measure times measure density). Immutable after construction.
class Grid {
public:
  Grid(int dim, int points_per_dim, Domain domain, Measure measure, BoxLayout layout);

  int dim() const { return dim_; }
  int points_per_dim() const { return n_; }
  Domain domain() const { return domain_; }
  BoxLayout layout() const { return layout_; }
  const Measure& measure() const { return measure_; }

  /// Number of nodes, points_per_dim^dim.
  Eigen::Index size() const { return weights_.size(); }
  /// Coordinates of node i (row-major: x index outer, y index inner).
  Point node(Eigen::Index i) const;
  /// Shared 1d coordinate axis.
  const Eigen::VectorXd& axis() const { return axis_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double total_mass() const { return weights_.sum(); }
  /// 1d cell width.
  double spacing() const { return h_; }
  /// True for boundary nodes of a Box01 FdLattice grid; false otherwise.
  bool on_boundary(Eigen::Index i) const;

  bool same_layout(const Grid& other) const;

private:
  int dim_;
  int n_;
  Domain domain_;
  Measure measure_;
  BoxLayout layout_;
  double h_;
  Eigen::VectorXd axis_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int dim, int points_per_dim, Domain domain,
                  Measure measure = Measure::lebesgue(),
                  BoxLayout layout = BoxLayout::FdLattice);

/// A function stored as one value per grid node.
struct FieldFunction {
  GridPtr grid;
  Eigen::VectorXd values;

  bool valid() const; // sizes match and every value is finite
};

FieldFunction make_field(const GridPtr& grid, const std::function<double(Point)>& f);
FieldFunction zero_field(const GridPtr& grid);

/// Quadrature inner product sum_i f_i g_i w_i. Throws on grid mismatch.
double inner_product(const FieldFunction& f, const FieldFunction& g);
double l2_norm_sq(const FieldFunction& f);
double l2_norm(const FieldFunction& f);

/// CSV with header `x[,y],value`, rows in node order.
void write_field_csv(std::ostream& os, const FieldFunction& f);
/// Reads values back onto the given grid; validates column count and length.
FieldFunction read_field_csv(std::istream& is, const GridPtr& grid);

} // namespace opal

#endif
