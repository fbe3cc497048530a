#include "convexpde/flux_law.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convexpde/errors.hpp"

namespace cpde {

FluxLaw::FluxLaw(double c3, double c2, double c1, std::string name)
    : c3_(c3), c2_(c2), c1_(c1), name_(std::move(name)) {
  if (!std::isfinite(c3) || !std::isfinite(c2) || !std::isfinite(c1))
    throw RangeError("flux coefficients must be finite");
  // |F'| is maximal at an endpoint or at the vertex of the parabola F'
  std::vector<double> probe = {0.0, 1.0};
  if (c3_ != 0.0) {
    const double v = -c2_ / (3 * c3_);
    if (v > 0.0 && v < 1.0) probe.push_back(v);
  }
  lipschitz_ = 0.0;
  for (double u : probe) lipschitz_ = std::max(lipschitz_, std::abs(Fprime(u)));
}

FluxLaw FluxLaw::burgers() { return FluxLaw(0.0, 0.5, 0.0, "burgers"); }

FluxLaw FluxLaw::linear(double c) {
  std::ostringstream n;
  n << "linear " << c;
  return FluxLaw(0.0, 0.0, c, n.str());
}

FluxLaw FluxLaw::concave_convex(double c3, double c2, double c1) {
  std::ostringstream n;
  n << "concave-convex " << c3 << ' ' << c2 << ' ' << c1;
  return FluxLaw(c3, c2, c1, n.str());
}

FluxLaw FluxLaw::parse(const std::string& descriptor) {
  std::istringstream in(descriptor);
  std::string kind;
  in >> kind;
  std::vector<double> args;
  double v;
  while (in >> v) args.push_back(v);
  if (!in.eof()) throw RangeError("unreadable flux arguments: " + descriptor);
  if (kind == "burgers" && args.empty()) return burgers();
  if (kind == "linear" && args.size() == 1) return linear(args[0]);
  if (kind == "concave-convex" && args.size() == 3) return concave_convex(args[0], args[1], args[2]);
  throw RangeError("unknown flux descriptor: " + descriptor);
}

Eigen::VectorXd FluxLaw::derivative_samples(const Eigen::VectorXd& levels) const {
  return levels.unaryExpr([this](double a) { return Fprime(a); });
}

std::vector<double> FluxLaw::critical_points() const {
  std::vector<double> roots;
  const double qa = 3 * c3_, qb = 2 * c2_, qc = c1_;
  if (qa == 0.0) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4 * qa * qc;
    if (disc >= 0.0) {
      // cancellation-free quadratic roots
      const double s = std::sqrt(disc);
      const double q = -0.5 * (qb + std::copysign(s, qb));
      if (q != 0.0) {
        roots.push_back(q / qa);
        roots.push_back(qc / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::vector<double> inside;
  for (double r : roots)
    if (r > 0.0 && r < 1.0) inside.push_back(r);
  return inside;
}

double FluxLaw::min_on(double a, double b) const {
  const double lo = std::min(a, b), hi = std::max(a, b);
  double m = std::min(F(lo), F(hi));
  for (double r : critical_points())
    if (r > lo && r < hi) m = std::min(m, F(r));
  return m;
}

double FluxLaw::max_on(double a, double b) const {
  const double lo = std::min(a, b), hi = std::max(a, b);
  double m = std::max(F(lo), F(hi));
  for (double r : critical_points())
    if (r > lo && r < hi) m = std::max(m, F(r));
  return m;
}

}  // namespace cpde
