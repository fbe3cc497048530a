#include "convexpde/born_infeld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

namespace cpde {

ABIField1D::ABIField1D(int n, const ABIState& s) : B1_const(s.B(0)), D1_const(s.D(0)) {
  if (n < 1) throw RangeError("ABIField1D: need at least one cell");
  values = s.packed().replicate(1, n);
}

void ABIField1D::check_constraints() const {
  for (int i = 0; i < cells(); ++i)
    if (values(4, i) != D1_const || values(7, i) != B1_const)
      throw InvariantViolation("ABIField1D: D1 or B1 not constant");
}

ABIField1D rest_field(int n) { return ABIField1D(n, ABIState{}); }

ABIField1D manifold_sine(int n, double amplitude, int k) {
  ABIField1D f(n, ABIState{});
  for (int i = 0; i < n; ++i) {
    const double th = 2 * std::numbers::pi * k * f.center(i);
    f.set_state(i, bi_embed<double>(Vec3<double>(0, amplitude * std::sin(th), 0),
                                    Vec3<double>(0, 0, amplitude * std::cos(th))));
  }
  return f;
}

ABIField1D chaplygin_riemann(int n, double hL, double QL, double hR, double QR) {
  if (!(hL > 0) || !(hR > 0)) throw NonpositiveDensity("chaplygin_riemann: h must be positive");
  ABIField1D f(n, ABIState{});
  for (int i = 0; i < n; ++i) {
    ABIState s;
    const bool left = f.center(i) < 0.5;
    s.h = left ? hL : hR;
    s.Q(0) = left ? QL : QR;
    f.set_state(i, s);
  }
  return f;
}

ABIField1D parse_profile(const std::string& descriptor, int n) {
  std::istringstream in(descriptor);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.empty()) throw ConfigError("abi profile: empty descriptor");
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok.at(i), &used);
      if (used != tok[i].size()) throw std::invalid_argument(tok[i]);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("abi profile: bad number in '" + descriptor + "'");
    }
  };
  auto expect = [&](std::size_t count) {
    if (tok.size() != count) throw ConfigError("abi profile: wrong arity in '" + descriptor + "'");
  };
  const std::string& name = tok[0];
  if (name == "rest") {
    expect(1);
    return rest_field(n);
  }
  if (name == "manifold-sine") {
    expect(3);
    const double k = num(2);
    if (k != std::floor(k)) throw ConfigError("abi profile: wave number must be an integer");
    return manifold_sine(n, num(1), static_cast<int>(k));
  }
  if (name == "chaplygin-riemann") {
    expect(5);
    try {
      return chaplygin_riemann(n, num(1), num(2), num(3), num(4));
    } catch (const NonpositiveDensity& e) {
      throw ConfigError(e.what());
    }
  }
  if (name == "boosted") {
    if (tok.size() < 3) throw ConfigError("abi profile: boosted needs a profile and a speed");
    std::string inner;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) inner += (i > 1 ? " " : "") + tok[i];
    return galilean_boost(parse_profile(inner, n), Vec3<double>(num(tok.size() - 1), 0, 0));
  }
  throw ConfigError("abi profile: unknown profile '" + name + "'");
}

ABIField1D galilean_boost(const ABIField1D& f, const Vec3<double>& u) {
  ABIField1D g = f;
  for (int i = 0; i < f.cells(); ++i) g.set_state(i, galilean_boost(f.state(i), u));
  return g;
}

double max_stable_dt(const ABIField1D& f) {
  double lam = 0.0;
  for (int i = 0; i < f.cells(); ++i) {
    if (!(f.values(0, i) > 0)) throw NonpositiveDensity("max_stable_dt: h must be positive");
    lam = std::max(lam, wave_speed_bound(f.state(i)));
  }
  return f.dx() / lam;
}

double flux_spectral_radius(const ABIState& s) {
  const Vec10<double> u = s.packed();
  Eigen::Matrix<double, 10, 10> jac;
  for (int c = 0; c < 10; ++c) {
    const double step = 1e-6 * std::max(1.0, std::abs(u(c)));
    Vec10<double> up = u, um = u;
    up(c) += step;
    um(c) -= step;
    jac.col(c) = (abi_flux(ABIState::unpack(up)) - abi_flux(ABIState::unpack(um))) / (2 * step);
  }
  return Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>>(jac, false).eigenvalues().cwiseAbs().maxCoeff();
}

ABIField1D fv_step(const ABIField1D& f, double dt, const StepOptions& opt, StepMonitor* monitor) {
  const int n = f.cells();
  const double dx = f.dx();
  Eigen::Matrix<double, 10, Eigen::Dynamic> flux(10, n);
  Eigen::VectorXd lam(n);
  for (int i = 0; i < n; ++i) {
    const ABIState s = f.state(i);
    flux.col(i) = abi_flux(s);
    lam(i) = wave_speed_bound(s);
  }
  if (dt * lam.maxCoeff() > dx * (1 + 1e-12))
    throw CFLViolation("fv_step: dt * lambda_max exceeds the cell width");

  // interface i+1/2 between cells i and i+1 (periodic)
  Eigen::Matrix<double, 10, Eigen::Dynamic> num(10, n);
  for (int i = 0; i < n; ++i) {
    const int r = (i + 1) % n;
    const double a = std::max(lam(i), lam(r));
    num.col(i) = 0.5 * (flux.col(i) + flux.col(r)) - 0.5 * a * (f.values.col(r) - f.values.col(i));
  }
  ABIField1D g = f;
  const double ratio = dt / dx;
  for (int i = 0; i < n; ++i) {
    const int l = (i + n - 1) % n;
    g.values.col(i) -= ratio * (num.col(i) - num.col(l));
  }
  // zero flux components: keep the constraint values bit-exact
  g.values.row(4).setConstant(f.D1_const);
  g.values.row(7).setConstant(f.B1_const);
  for (int i = 0; i < n; ++i)
    if (!(g.values(0, i) > 0)) throw PositivityLoss("fv_step: h became nonpositive");

  if (opt.monitor && monitor) {
    // report the sampled cell where the spectrum comes closest to (or
    // furthest past) the bound
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; i += std::max(1, opt.monitor_stride)) {
      const ABIState s = g.state(i);
      const double rho = flux_spectral_radius(s);
      const double bound = wave_speed_bound(s);
      if (rho - bound > worst) {
        worst = rho - bound;
        monitor->spectral_estimate = rho;
        monitor->speed_bound = bound;
      }
    }
    monitor->bound_exceeded = worst > 0.0;
  }
  return g;
}

double manifold_residual(const ABIField1D& f) {
  double r = 0.0;
  for (int i = 0; i < f.cells(); ++i) r = std::max(r, manifold_defect(f.state(i)));
  return r;
}

double hull_residual(const ABIField1D& f) {
  double r = 0.0;
  for (int i = 0; i < f.cells(); ++i) r = std::max(r, hull_residual(f.state(i)));
  return r;
}

double total_energy(const ABIField1D& f) {
  double u = 0.0;
  for (int i = 0; i < f.cells(); ++i) u += energy_U(f.state(i));
  return u * f.dx();
}

}  // namespace cpde
