#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convexpde/measures_ot.hpp"

namespace cpde {

/// Named domains. Square, rectangle, disk, cube and ball are centered at the
/// origin; the disk and ball have radius 1. Polygons are given by their
/// vertices in order (any orientation, simple).
class Shape {
 public:
  enum class Kind { Square, Rectangle, Disk, Polygon, Cube, Ball };

  static Shape square(double side = 1.0);
  static Shape rectangle(double a, double b);
  static Shape disk(double radius = 1.0);
  static Shape polygon(std::vector<Eigen::Vector2d> vertices);
  static Shape cube(double side = 1.0);
  static Shape ball(double radius = 1.0);
  /// "square", "disk", "rectangle a b", "cube", "ball", "polygon x1 y1 x2 y2 ..."
  static Shape parse(const std::string& descriptor);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string name() const;
  bool contains(const Eigen::VectorXd& p) const;
  /// Perimeter (d = 2) or surface area (d = 3), analytic.
  double boundary_measure() const;
  double exact_volume() const;
  Eigen::VectorXd lower() const { return lo_; }
  Eigen::VectorXd upper() const { return hi_; }

 private:
  Kind kind_ = Kind::Square;
  int dim_ = 2;
  double a_ = 1.0, b_ = 1.0;
  std::vector<Eigen::Vector2d> vertices_;
  Eigen::VectorXd lo_, hi_;
};

/// Uniform cell grid restricted to a shape. A cell belongs to the domain
/// when its center does; the longest bounding-box side holds `resolution`
/// cells.
struct DomainGrid {
  Shape shape;
  int resolution = 0;
  double cell_size = 0.0;
  Eigen::MatrixXd centers;           // d x N
  std::vector<Eigen::VectorXi> index;  // lattice index of each center
  Eigen::VectorXi lattice_extent;    // cells per axis of the bounding box
  double boundary_length = 0.0;
  double volume = 0.0;

  int dim() const { return shape.dim(); }
  Eigen::Index size() const { return centers.cols(); }
  double cell_volume() const;
};

DomainGrid make_domain_grid(const Shape& shape, int resolution);

/// Volume of the unit ball, pi^{d/2} / Gamma(d/2 + 1).
double unit_ball_volume(int d);

struct IsoperimetricBound {
  double lhs = 0.0;     // |Omega|^{1-1/d} |B_1|^{1/d}
  double rhs = 0.0;     // |boundary| / d
  double margin = 0.0;  // rhs - lhs
};

IsoperimetricBound isoperimetric_bound(const DomainGrid& domain);

struct ChainReport {
  int resolution = 0;
  double cell_size = 0.0;
  Eigen::Index source_cells = 0;
  Eigen::Index ball_cells = 0;
  std::int64_t pivots = 0;

  IsoperimetricBound bound;
  /// sum div_h T * cell volume
  double divergence_integral = 0.0;
  /// sum d (det J_h)^{1/d} * cell volume, the middle of the chain
  double det_root_integral = 0.0;
  /// d |Omega|^{1-1/d} |B_1|^{1/d}
  double chain_lower_bound = 0.0;
  /// divergence_integral - chain_lower_bound
  double chain_gap = 0.0;

  double amgm_residual_max = 0.0;
  Eigen::Index amgm_violations = 0;  // cells with residual above amgm_tolerance
  double amgm_tolerance = 0.0;
  double asymmetry_max = 0.0;
  Eigen::Index asymmetric_cells = 0;  // cells with |J - J^T| above asymmetry_tolerance
  double asymmetry_tolerance = 0.0;
  double map_range_excess = 0.0;  // max(|T_i| - 1, 0)
};

struct ChainOptions {
  double amgm_tolerance = 1e-9;
  double asymmetry_tolerance = 1e-6;
};

/// Transports the uniform measure on the domain cells to the uniform
/// measure on the unit-ball cells (same resolution across the ball's
/// diameter) and evaluates each link of the divergence chain.
ChainReport gromov_chain_check(const DomainGrid& domain, const ChainOptions& opt = {});
ChainReport gromov_chain_check(const Shape& shape, int resolution, const ChainOptions& opt = {});

}  // namespace cpde
