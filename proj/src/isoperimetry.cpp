#include "convexpde/isoperimetry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cpde {

namespace {

Eigen::VectorXd constant(int d, double v) { return Eigen::VectorXd::Constant(d, v); }

}  // namespace

Shape Shape::square(double side) {
  Shape s;
  s.kind_ = Kind::Square;
  s.dim_ = 2;
  s.a_ = s.b_ = side;
  s.lo_ = constant(2, -side / 2);
  s.hi_ = constant(2, side / 2);
  return s;
}

Shape Shape::rectangle(double a, double b) {
  if (!(a > 0 && b > 0)) throw InvalidMeasure("rectangle sides must be positive");
  Shape s;
  s.kind_ = Kind::Rectangle;
  s.dim_ = 2;
  s.a_ = a;
  s.b_ = b;
  s.lo_ = Eigen::Vector2d(-a / 2, -b / 2);
  s.hi_ = Eigen::Vector2d(a / 2, b / 2);
  return s;
}

Shape Shape::disk(double radius) {
  Shape s;
  s.kind_ = Kind::Disk;
  s.dim_ = 2;
  s.a_ = radius;
  s.lo_ = constant(2, -radius);
  s.hi_ = constant(2, radius);
  return s;
}

Shape Shape::polygon(std::vector<Eigen::Vector2d> vertices) {
  if (vertices.size() < 3) throw InvalidMeasure("polygon needs at least three vertices");
  Shape s;
  s.kind_ = Kind::Polygon;
  s.dim_ = 2;
  s.lo_ = vertices.front();
  s.hi_ = vertices.front();
  for (const auto& v : vertices) {
    s.lo_ = s.lo_.cwiseMin(v);
    s.hi_ = s.hi_.cwiseMax(v);
  }
  s.vertices_ = std::move(vertices);
  if (s.exact_volume() <= 0.0) throw InvalidMeasure("degenerate polygon");
  return s;
}

Shape Shape::cube(double side) {
  Shape s;
  s.kind_ = Kind::Cube;
  s.dim_ = 3;
  s.a_ = side;
  s.lo_ = constant(3, -side / 2);
  s.hi_ = constant(3, side / 2);
  return s;
}

Shape Shape::ball(double radius) {
  Shape s;
  s.kind_ = Kind::Ball;
  s.dim_ = 3;
  s.a_ = radius;
  s.lo_ = constant(3, -radius);
  s.hi_ = constant(3, radius);
  return s;
}

Shape Shape::parse(const std::string& descriptor) {
  std::istringstream in(descriptor);
  std::string name;
  in >> name;
  std::vector<double> args;
  double v;
  while (in >> v) args.push_back(v);
  if (!in.eof()) throw InvalidMeasure("unreadable shape arguments: " + descriptor);
  auto need = [&](std::size_t k) {
    if (args.size() != k) throw InvalidMeasure("wrong number of arguments for shape " + name);
  };
  if (name == "square") {
    if (args.empty()) return square();
    need(1);
    return square(args[0]);
  }
  if (name == "rectangle") {
    need(2);
    return rectangle(args[0], args[1]);
  }
  if (name == "disk") {
    if (args.empty()) return disk();
    need(1);
    return disk(args[0]);
  }
  if (name == "cube") {
    if (args.empty()) return cube();
    need(1);
    return cube(args[0]);
  }
  if (name == "ball") {
    if (args.empty()) return ball();
    need(1);
    return ball(args[0]);
  }
  if (name == "polygon") {
    if (args.size() < 6 || args.size() % 2 != 0)
      throw InvalidMeasure("polygon needs an even list of at least six coordinates");
    std::vector<Eigen::Vector2d> verts;
    for (std::size_t k = 0; k < args.size(); k += 2) verts.emplace_back(args[k], args[k + 1]);
    return polygon(std::move(verts));
  }
  throw InvalidMeasure("unknown shape: " + name);
}

std::string Shape::name() const {
  switch (kind_) {
    case Kind::Square: return "square";
    case Kind::Rectangle: return "rectangle";
    case Kind::Disk: return "disk";
    case Kind::Polygon: return "polygon";
    case Kind::Cube: return "cube";
    case Kind::Ball: return "ball";
  }
  return "unknown";
}

bool Shape::contains(const Eigen::VectorXd& p) const {
  switch (kind_) {
    case Kind::Square:
    case Kind::Rectangle:
    case Kind::Cube:
      return ((p - lo_).array() >= 0).all() && ((hi_ - p).array() >= 0).all();
    case Kind::Disk:
    case Kind::Ball:
      return p.squaredNorm() <= a_ * a_;
    case Kind::Polygon: {
      bool inside = false;
      const std::size_t n = vertices_.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = vertices_[i];
        const auto& b = vertices_[j];
        if ((a.y() > p(1)) != (b.y() > p(1))) {
          const double xc = a.x() + (p(1) - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
          if (p(0) < xc) inside = !inside;
        }
      }
      return inside;
    }
  }
  return false;
}

double Shape::boundary_measure() const {
  switch (kind_) {
    case Kind::Square: return 4 * a_;
    case Kind::Rectangle: return 2 * (a_ + b_);
    case Kind::Disk: return 2 * std::numbers::pi * a_;
    case Kind::Cube: return 6 * a_ * a_;
    case Kind::Ball: return 4 * std::numbers::pi * a_ * a_;
    case Kind::Polygon: {
      double p = 0.0;
      for (std::size_t i = 0; i < vertices_.size(); ++i)
        p += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
      return p;
    }
  }
  return 0.0;
}

double Shape::exact_volume() const {
  switch (kind_) {
    case Kind::Square: return a_ * a_;
    case Kind::Rectangle: return a_ * b_;
    case Kind::Disk: return std::numbers::pi * a_ * a_;
    case Kind::Cube: return a_ * a_ * a_;
    case Kind::Ball: return 4.0 / 3.0 * std::numbers::pi * a_ * a_ * a_;
    case Kind::Polygon: {
      double s = 0.0;
      for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto& a = vertices_[i];
        const auto& b = vertices_[(i + 1) % vertices_.size()];
        s += a.x() * b.y() - b.x() * a.y();
      }
      return std::abs(s) / 2;
    }
  }
  return 0.0;
}

double DomainGrid::cell_volume() const { return std::pow(cell_size, dim()); }

DomainGrid make_domain_grid(const Shape& shape, int resolution) {
  if (resolution < 1) throw InvalidMeasure("resolution must be positive");
  const int d = shape.dim();
  const Eigen::VectorXd lo = shape.lower();
  const Eigen::VectorXd hi = shape.upper();
  const Eigen::VectorXd extent = hi - lo;
  DomainGrid g;
  g.shape = shape;
  g.resolution = resolution;
  g.cell_size = extent.maxCoeff() / resolution;
  g.lattice_extent.resize(d);
  for (int k = 0; k < d; ++k)
    g.lattice_extent(k) = std::max(1, static_cast<int>(std::lround(extent(k) / g.cell_size)));
  const Eigen::VectorXd origin =
      0.5 * (lo + hi) - 0.5 * g.cell_size * g.lattice_extent.cast<double>();

  std::vector<Eigen::VectorXd> pts;
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(d);
  const long total = g.lattice_extent.cast<long>().prod();
  for (long flat = 0; flat < total; ++flat) {
    long r = flat;
    for (int k = 0; k < d; ++k) {
      idx(k) = static_cast<int>(r % g.lattice_extent(k));
      r /= g.lattice_extent(k);
    }
    Eigen::VectorXd c = origin + g.cell_size * (idx.cast<double>().array() + 0.5).matrix();
    if (shape.contains(c)) {
      pts.push_back(c);
      g.index.push_back(idx);
    }
  }
  if (pts.empty()) throw EmptySupport("domain grid contains no cell centers");
  g.centers.resize(d, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) g.centers.col(static_cast<Eigen::Index>(i)) = pts[i];
  g.volume = static_cast<double>(pts.size()) * g.cell_volume();
  g.boundary_length = shape.boundary_measure();
  return g;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

IsoperimetricBound isoperimetric_bound(const DomainGrid& domain) {
  const double d = domain.dim();
  IsoperimetricBound b;
  b.lhs = std::pow(domain.volume, 1.0 - 1.0 / d) * std::pow(unit_ball_volume(domain.dim()), 1.0 / d);
  b.rhs = domain.boundary_length / d;
  b.margin = b.rhs - b.lhs;
  return b;
}

ChainReport gromov_chain_check(const Shape& shape, int resolution, const ChainOptions& opt) {
  return gromov_chain_check(make_domain_grid(shape, resolution), opt);
}

ChainReport gromov_chain_check(const DomainGrid& domain, const ChainOptions& opt) {
  const int d = domain.dim();
  const Shape ball_shape = d == 2 ? Shape::disk() : Shape::ball();
  const DomainGrid ball = make_domain_grid(ball_shape, domain.resolution);

  const auto alpha = DiscreteMeasure::uniform(domain.centers);
  const auto beta = DiscreteMeasure::uniform(ball.centers);
  const OtSolution sol = solve_discrete_ot(alpha, beta);
  const Eigen::MatrixXd t = barycentric_map(sol.plan);

  ChainReport rep;
  rep.resolution = domain.resolution;
  rep.cell_size = domain.cell_size;
  rep.source_cells = domain.size();
  rep.ball_cells = ball.size();
  rep.pivots = sol.stats.pivots;
  rep.bound = isoperimetric_bound(domain);
  rep.chain_lower_bound = d * rep.bound.lhs;
  rep.amgm_tolerance = opt.amgm_tolerance;
  rep.asymmetry_tolerance = opt.asymmetry_tolerance;

  // lattice lookup: flat lattice index -> cell id
  const Eigen::VectorXi& ext = domain.lattice_extent;
  std::vector<Eigen::Index> lookup(static_cast<std::size_t>(ext.cast<long>().prod()), -1);
  auto flat = [&](const Eigen::VectorXi& idx) {
    long f = 0;
    for (int k = d - 1; k >= 0; --k) f = f * ext(k) + idx(k);
    return f;
  };
  for (Eigen::Index i = 0; i < domain.size(); ++i)
    lookup[static_cast<std::size_t>(flat(domain.index[static_cast<std::size_t>(i)]))] = i;
  auto neighbor = [&](Eigen::Index i, int axis, int step) -> Eigen::Index {
    Eigen::VectorXi idx = domain.index[static_cast<std::size_t>(i)];
    idx(axis) += step;
    if (idx(axis) < 0 || idx(axis) >= ext(axis)) return -1;
    return lookup[static_cast<std::size_t>(flat(idx))];
  };

  const double h = domain.cell_size;
  const double vol = domain.cell_volume();
  Eigen::MatrixXd jac(d, d);
  for (Eigen::Index i = 0; i < domain.size(); ++i) {
    for (int k = 0; k < d; ++k) {
      const Eigen::Index p = neighbor(i, k, +1);
      const Eigen::Index m = neighbor(i, k, -1);
      if (p >= 0 && m >= 0) {
        jac.col(k) = (t.col(p) - t.col(m)) / (2 * h);
      } else if (p >= 0) {
        jac.col(k) = (t.col(p) - t.col(i)) / h;
      } else if (m >= 0) {
        jac.col(k) = (t.col(i) - t.col(m)) / h;
      } else {
        jac.col(k).setZero();
      }
    }
    const double asym = (jac - jac.transpose()).cwiseAbs().maxCoeff();
    rep.asymmetry_max = std::max(rep.asymmetry_max, asym);
    if (asym > opt.asymmetry_tolerance) ++rep.asymmetric_cells;

    const Eigen::MatrixXd sym = 0.5 * (jac + jac.transpose());
    const double trace = sym.trace();
    const double det = std::max(0.0, sym.determinant());
    const double root = d * std::pow(det, 1.0 / d);
    const double resid = std::max(0.0, root - trace);
    rep.amgm_residual_max = std::max(rep.amgm_residual_max, resid);
    if (resid > opt.amgm_tolerance) ++rep.amgm_violations;

    rep.divergence_integral += trace * vol;
    rep.det_root_integral += root * vol;
    rep.map_range_excess = std::max(rep.map_range_excess, t.col(i).norm() - 1.0);
  }
  rep.map_range_excess = std::max(0.0, rep.map_range_excess);
  rep.chain_gap = rep.divergence_integral - rep.chain_lower_bound;
  return rep;
}

}  // namespace cpde
