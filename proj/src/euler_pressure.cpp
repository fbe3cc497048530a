#include "convexpde/euler_pressure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "convexpde/parallel.hpp"

namespace cpde {

namespace {

constexpr double kPi = std::numbers::pi;

// Catmull-Rom (Keys, a = -1/2) weights for nodes i-1 .. i+2 at fraction f
inline void cr_weights(double f, double w[4], double dw[4]) {
  const double f2 = f * f, f3 = f2 * f;
  w[0] = 0.5 * (-f3 + 2 * f2 - f);
  w[1] = 0.5 * (3 * f3 - 5 * f2 + 2);
  w[2] = 0.5 * (-3 * f3 + 4 * f2 + f);
  w[3] = 0.5 * (f3 - f2);
  if (dw) {
    dw[0] = 0.5 * (-3 * f2 + 4 * f - 1);
    dw[1] = 0.5 * (9 * f2 - 10 * f);
    dw[2] = 0.5 * (-9 * f2 + 8 * f + 1);
    dw[3] = 0.5 * (3 * f2 - 2 * f);
  }
}

// Gauss-Legendre rule on [a, b] (Golub-Welsch)
void gauss_legendre(int n, double a, double b, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jm(k, k - 1) = jm(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  x = (0.5 * (b - a)) * (es.eigenvalues().array() + 1.0).matrix() + Eigen::VectorXd::Constant(n, a);
  w = (b - a) * es.eigenvectors().row(0).transpose().array().square().matrix();
}

struct Lattice {
  int n;
  double h;
  Eigen::Vector2d lo;
  Eigen::Index stride() const { return n + 3; }
  // cell index clamped to [0, n-1] and fraction inside it
  void locate(double v, double lo_v, int& i, double& f) const {
    const double u = (v - lo_v) / h;
    i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
    f = u - i;
  }
};

// integral over D of each Catmull-Rom cardinal function
Eigen::VectorXd compute_weights(const ConvexDomain& dom, const Lattice& lat) {
  Eigen::VectorXd wts = Eigen::VectorXd::Zero(lat.stride() * lat.stride());
  auto add = [&](const Eigen::Vector2d& p, double wq) {
    int i, j;
    double fx, fy, wx[4], wy[4];
    lat.locate(p.x(), lat.lo.x(), i, fx);
    lat.locate(p.y(), lat.lo.y(), j, fy);
    cr_weights(fx, wx, nullptr);
    cr_weights(fy, wy, nullptr);
    for (int b = 0; b < 4; ++b)
      for (int a = 0; a < 4; ++a) wts((i + a) + lat.stride() * (j + b)) += wq * wx[a] * wy[b];
  };
  if (dom.kind() == ConvexDomain::Kind::Box) {
    // the interpolant is a bicubic on each cell: 3-point Gauss is exact
    Eigen::VectorXd gx, gw;
    gauss_legendre(3, 0.0, lat.h, gx, gw);
    for (int j = 0; j < lat.n; ++j)
      for (int i = 0; i < lat.n; ++i)
        for (int b = 0; b < 3; ++b)
          for (int a = 0; a < 3; ++a)
            add(lat.lo + Eigen::Vector2d(i * lat.h + gx(a), j * lat.h + gx(b)), gw(a) * gw(b));
  } else {
    // polar rule: Gauss in r on [0, 1], trapezoid in the angle
    const int nr = 8 * lat.n, nt = 16 * lat.n;
    Eigen::VectorXd rx, rw;
    gauss_legendre(nr, 0.0, 1.0, rx, rw);
    for (int a = 0; a < nr; ++a)
      for (int b = 0; b < nt; ++b) {
        const double th = 2 * kPi * (b + 0.5) / nt;
        add(rx(a) * Eigen::Vector2d(std::cos(th), std::sin(th)), rw(a) * rx(a) * 2 * kPi / nt);
      }
  }
  return wts;
}

std::shared_ptr<const Eigen::VectorXd> cached_weights(const ConvexDomain& dom, const Lattice& lat) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const Eigen::VectorXd>> cache;
  const std::pair<int, int> key{static_cast<int>(dom.kind()), lat.n};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto w = std::make_shared<const Eigen::VectorXd>(compute_weights(dom, lat));
  cache.emplace(key, w);
  return w;
}

}  // namespace

// ---------------------------------------------------------------- domain

bool ConvexDomain::contains(const Eigen::Vector2d& p, double slack) const {
  if (kind_ == Kind::Disk) return p.norm() <= 1.0 + slack;
  return (p.array().abs() <= 0.5 + slack).all();
}

Eigen::Vector2d ConvexDomain::project(const Eigen::Vector2d& p) const {
  if (kind_ == Kind::Disk) {
    const double r = p.norm();
    return r > 1.0 ? Eigen::Vector2d(p / r) : p;
  }
  return p.cwiseMax(-0.5).cwiseMin(0.5);
}

double ConvexDomain::area() const { return kind_ == Kind::Disk ? kPi : 1.0; }

Eigen::Vector2d ConvexDomain::lower() const {
  return Eigen::Vector2d::Constant(kind_ == Kind::Disk ? -1.0 : -0.5);
}

Eigen::Vector2d ConvexDomain::upper() const {
  return Eigen::Vector2d::Constant(kind_ == Kind::Disk ? 1.0 : 0.5);
}

int ConvexDomain::midpoint_failures(int samples, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lower().x(), upper().x());
  std::uniform_real_distribution<double> uy(lower().y(), upper().y());
  auto draw = [&] {
    for (;;) {
      Eigen::Vector2d p(ux(rng), uy(rng));
      if (contains(p)) return p;
    }
  };
  int fails = 0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::Vector2d a = draw(), b = draw();
    if (!contains(0.5 * (a + b))) ++fails;
  }
  return fails;
}

// ---------------------------------------------------------------- field

PressureField::PressureField(const ConvexDomain& domain, int n_space, int n_time, double t0,
                             double t1)
    : domain_(domain), n_(n_space), n_t_(n_time), t0_(t0), t1_(t1) {
  if (n_space < 4) throw RangeError("PressureField: need at least 4 cells per axis");
  if (n_time < 1) throw RangeError("PressureField: need at least one time interval");
  if (!(t1 > t0)) throw RangeError("PressureField: empty time interval");
  lo_ = domain.lower();
  h_ = (domain.upper().x() - domain.lower().x()) / n_;
  values_ = Eigen::MatrixXd::Zero(node_count(), n_t_ + 1);
  weights_ = cached_weights(domain_, Lattice{n_, h_, lo_});
}

Eigen::Vector2d PressureField::node(Eigen::Index c) const {
  const Eigen::Index s = n_ + 3;
  return lo_ + h_ * Eigen::Vector2d(static_cast<double>(c % s - 1), static_cast<double>(c / s - 1));
}

double PressureField::eval(double t, const Eigen::Vector2d& x, Eigen::Vector2d* grad) const {
  const double tau = (t - t0_) / (t1_ - t0_) * n_t_;
  const int k = std::clamp(static_cast<int>(std::floor(tau)), 0, n_t_ - 1);
  const double lam = tau - k;
  const Lattice lat{n_, h_, lo_};
  int i, j;
  double fx, fy, wx[4], wy[4], dwx[4], dwy[4];
  lat.locate(x.x(), lo_.x(), i, fx);
  lat.locate(x.y(), lo_.y(), j, fy);
  cr_weights(fx, wx, grad ? dwx : nullptr);
  cr_weights(fy, wy, grad ? dwy : nullptr);
  const Eigen::Index s = n_ + 3;
  const double* v0 = values_.col(k).data();
  const double* v1 = values_.col(k + 1).data();
  double val = 0.0, gx = 0.0, gy = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0, drow = 0.0;
    for (int a = 0; a < 4; ++a) {
      const Eigen::Index c = (i + a) + s * (j + b);
      const double v = (1.0 - lam) * v0[c] + lam * v1[c];
      row += wx[a] * v;
      if (grad) drow += dwx[a] * v;
    }
    val += wy[b] * row;
    if (grad) {
      gx += wy[b] * drow;
      gy += dwy[b] * row;
    }
  }
  if (grad) *grad = Eigen::Vector2d(gx, gy) / h_;
  return val;
}

double PressureField::operator()(double t, const Eigen::Vector2d& x) const {
  return eval(t, x, nullptr);
}

Eigen::Vector2d PressureField::gradient(double t, const Eigen::Vector2d& x) const {
  Eigen::Vector2d g;
  eval(t, x, &g);
  return g;
}

double PressureField::mean(int k) const {
  return weights_->dot(values_.col(k)) / weights_->sum();
}

void PressureField::normalize() {
  for (int k = 0; k <= n_t_; ++k) values_.col(k).array() -= mean(k);
}

double PressureField::max_abs_mean() const {
  double m = 0.0;
  for (int k = 0; k <= n_t_; ++k) m = std::max(m, std::abs(mean(k)));
  return m;
}

bool PressureField::same_layout(const PressureField& o) const {
  return domain_.kind() == o.domain_.kind() && n_ == o.n_ && n_t_ == o.n_t_ && t0_ == o.t0_ &&
         t1_ == o.t1_;
}

PressureField& PressureField::operator+=(const PressureField& o) {
  if (!same_layout(o)) throw GridMismatch("PressureField: layouts differ");
  values_ += o.values_;
  return *this;
}

PressureField& PressureField::operator*=(double s) {
  values_ *= s;
  return *this;
}

// ---------------------------------------------------------------- endpoints

ParticleEndpoints sample_endpoints(const ConvexDomain& domain, int n_rings, int n_angles) {
  if (n_rings < 1 || n_angles < 1) throw RangeError("sample_endpoints: empty sample set");
  const Eigen::Index n = static_cast<Eigen::Index>(n_rings) * n_angles;
  ParticleEndpoints e;
  e.x.resize(2, n);
  e.w = Eigen::VectorXd::Constant(n, domain.area() / static_cast<double>(n));
  Eigen::Index c = 0;
  for (int r = 0; r < n_rings; ++r) {
    for (int a = 0; a < n_angles; ++a, ++c) {
      if (domain.kind() == ConvexDomain::Kind::Disk) {
        const double rad = std::sqrt((r + 0.5) / n_rings);
        const double th = 2 * kPi * (a + 0.5 * (r % 2)) / n_angles;
        e.x.col(c) = rad * Eigen::Vector2d(std::cos(th), std::sin(th));
      } else {
        e.x.col(c) = Eigen::Vector2d((a + 0.5) / n_angles - 0.5, (r + 0.5) / n_rings - 0.5);
      }
    }
  }
  e.y = e.x;
  return e;
}

// ---------------------------------------------------------------- paths

namespace {

class Action {
 public:
  Action(const PressureField& q, int n_seg) : q_(q), n_(n_seg), dt_((q.t1() - q.t0()) / n_seg) {}

  double dt() const { return dt_; }
  double time(int k) const { return q_.t0() + k * dt_; }

  double value(const Path& z) const {
    double kin = 0.0, pot = 0.0;
    for (int k = 0; k < n_; ++k) kin += (z.col(k + 1) - z.col(k)).squaredNorm();
    for (int k = 0; k <= n_; ++k) pot += weight(k) * q_(time(k), z.col(k));
    return kin / (2 * dt_) - dt_ * pot;
  }

  // gradient with respect to the interior nodes; endpoint columns are zero
  double value_grad(const Path& z, Path& g) const {
    g.setZero(2, n_ + 1);
    double kin = 0.0, pot = 0.0;
    for (int k = 0; k < n_; ++k) kin += (z.col(k + 1) - z.col(k)).squaredNorm();
    Eigen::Vector2d gq;
    pot += 0.5 * q_(time(0), z.col(0)) + 0.5 * q_(time(n_), z.col(n_));
    for (int k = 1; k < n_; ++k) {
      pot += q_.eval(time(k), z.col(k), &gq);
      g.col(k) = (2 * z.col(k) - z.col(k - 1) - z.col(k + 1)) / dt_ - dt_ * gq;
    }
    return kin / (2 * dt_) - dt_ * pot;
  }

 private:
  double weight(int k) const { return (k == 0 || k == n_) ? 0.5 : 1.0; }
  const PressureField& q_;
  int n_;
  double dt_;
};

void project_interior(const ConvexDomain& dom, Path& z) {
  for (Eigen::Index k = 1; k + 1 < z.cols(); ++k) z.col(k) = dom.project(z.col(k));
}

struct SpgOutcome {
  double value;
  Path path;
  int iterations;
  double pg;
  bool converged;
};

SpgOutcome spg(const Action& act, const ConvexDomain& dom, Path z, const PathOptions& opt) {
  constexpr int kMemory = 10;
  constexpr double kGamma = 1e-4;
  constexpr double kAlphaMin = 1e-12, kAlphaMax = 1e12;
  project_interior(dom, z);
  Path g, gt, d, zt;
  double f = act.value_grad(z, g);
  std::deque<double> hist{f};

  auto proj_grad_norm = [&](double step) {
    Path p = z - step * g;
    project_interior(dom, p);
    return (p - z).norm();
  };
  double pg = proj_grad_norm(1.0);
  Path p1 = z - g;
  project_interior(dom, p1);
  double alpha = std::clamp(1.0 / std::max((p1 - z).cwiseAbs().maxCoeff(), 1e-300), kAlphaMin, kAlphaMax);

  int it = 0;
  for (; it < opt.max_iterations && pg >= opt.tolerance; ++it) {
    d = z - alpha * g;
    project_interior(dom, d);
    d -= z;
    const double gd = (g.array() * d.array()).sum();
    const double fmax = *std::max_element(hist.begin(), hist.end());
    double lam = 1.0;
    double ft;
    for (int ls = 0;; ++ls) {
      zt = z + lam * d;
      ft = act.value(zt);
      if (ft <= fmax + kGamma * lam * gd || ls > 60) break;
      const double denom = ft - f - lam * gd;
      double next = denom > 0 ? -0.5 * lam * lam * gd / denom : 0.5 * lam;
      if (!(next >= 0.1 * lam && next <= 0.9 * lam)) next = 0.5 * lam;
      lam = next;
    }
    ft = act.value_grad(zt, gt);
    const Path s = zt - z;
    const Path yv = gt - g;
    const double sy = (s.array() * yv.array()).sum();
    const double ss = s.squaredNorm();
    alpha = sy > 0 ? std::clamp(ss / sy, kAlphaMin, kAlphaMax) : kAlphaMax;
    z.swap(zt);
    g.swap(gt);
    f = ft;
    hist.push_back(f);
    if (static_cast<int>(hist.size()) > kMemory) hist.pop_front();
    pg = proj_grad_norm(1.0);
    if (ss == 0.0 && pg >= opt.tolerance) break;  // stalled
  }
  return {f, z, it, pg, pg < opt.tolerance};
}

// Gradient steps preconditioned by the discrete Laplacian of the kinetic
// term (Thomas solve per coordinate). Under the smallness condition this
// contracts like a fixed point with factor about (t1 - t0)^2 lambda_max / pi^2;
// used only to seed the projected-gradient solve, which certifies the result.
void precondition_descend(const Action& act, const ConvexDomain& dom, Path& z, double tol) {
  const Eigen::Index m = z.cols() - 2;
  if (m < 1) return;
  Path g;
  double f = act.value_grad(z, g);
  Eigen::VectorXd cp(m);
  for (int it = 0; it < 60; ++it) {
    // solve tridiag(-1, 2, -1) s = dt * g on the interior nodes
    Eigen::Matrix2Xd d(2, m);
    double prev = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double denom = 2.0 - prev;
      cp(k) = -1.0 / denom;
      const Eigen::Vector2d rhs = act.dt() * g.col(k + 1);
      d.col(k) = (rhs + (k > 0 ? Eigen::Vector2d(d.col(k - 1)) : Eigen::Vector2d::Zero())) / denom;
      prev = -cp(k);
    }
    for (Eigen::Index k = m - 2; k >= 0; --k) d.col(k) -= cp(k) * d.col(k + 1);
    Path zt = z;
    zt.middleCols(1, m) -= d;
    project_interior(dom, zt);
    Path gt;
    const double ft = act.value_grad(zt, gt);
    if (!(ft < f)) return;
    const double moved = (zt - z).norm();
    z.swap(zt);
    g.swap(gt);
    f = ft;
    if (moved < 1e-3 * tol) return;
  }
}

Path straight_line(const Eigen::Vector2d& x, const Eigen::Vector2d& y, int n_seg) {
  Path z(2, n_seg + 1);
  for (int k = 0; k <= n_seg; ++k) z.col(k) = x + (y - x) * (static_cast<double>(k) / n_seg);
  return z;
}

// piecewise-linear resampling of a path with uniform time nodes
Path resample(const Path& coarse, int n_seg) {
  const int m = static_cast<int>(coarse.cols()) - 1;
  Path z(2, n_seg + 1);
  for (int k = 0; k <= n_seg; ++k) {
    const double s = static_cast<double>(k) * m / n_seg;
    const int i = std::min(static_cast<int>(std::floor(s)), m - 1);
    const double f = s - i;
    z.col(k) = (1 - f) * coarse.col(i) + f * coarse.col(i + 1);
  }
  return z;
}

Path dp_seed(const PressureField& q, const Eigen::Vector2d& x, const Eigen::Vector2d& y,
             const PathOptions& opt) {
  const ConvexDomain& dom = q.domain();
  const int steps = std::max(2, std::min(opt.dp_steps, opt.n_seg));
  const double dt = (q.t1() - q.t0()) / steps;
  std::vector<Eigen::Vector2d> pts;
  const Eigen::Vector2d lo = dom.lower(), hi = dom.upper();
  for (int j = 0; j < opt.dp_grid; ++j)
    for (int i = 0; i < opt.dp_grid; ++i) {
      const Eigen::Vector2d p = lo + (hi - lo).cwiseProduct(
                                         Eigen::Vector2d((i + 0.5) / opt.dp_grid, (j + 0.5) / opt.dp_grid));
      if (dom.contains(p)) pts.push_back(p);
    }
  const int m = static_cast<int>(pts.size());
  if (m == 0) return straight_line(x, y, opt.n_seg);
  Eigen::MatrixXd node_pot(m, steps + 1);
  for (int k = 1; k < steps; ++k)
    for (int a = 0; a < m; ++a) node_pot(a, k) = q(q.t0() + k * dt, pts[a]);

  Eigen::VectorXd cost(m), next(m);
  std::vector<std::vector<int>> back(steps, std::vector<int>(m, -1));
  for (int a = 0; a < m; ++a) cost(a) = (pts[a] - x).squaredNorm() / (2 * dt) - dt * node_pot(a, 1);
  for (int k = 2; k < steps; ++k) {
    for (int b = 0; b < m; ++b) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int a = 0; a < m; ++a) {
        const double c = cost(a) + (pts[b] - pts[a]).squaredNorm() / (2 * dt);
        if (c < best) {
          best = c;
          arg = a;
        }
      }
      next(b) = best - dt * node_pot(b, k);
      back[k][b] = arg;
    }
    cost.swap(next);
  }
  int arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m; ++a) {
    const double c = cost(a) + (y - pts[a]).squaredNorm() / (2 * dt);
    if (c < best) {
      best = c;
      arg = a;
    }
  }
  Path coarse(2, steps + 1);
  coarse.col(0) = x;
  coarse.col(steps) = y;
  for (int k = steps - 1; k >= 1; --k) {
    coarse.col(k) = pts[arg];
    if (k > 1) arg = back[k][arg];
  }
  return resample(coarse, opt.n_seg);
}

}  // namespace

double path_action(const PressureField& q, const Path& z) {
  if (z.cols() < 2) throw RangeError("path_action: need at least one segment");
  return Action(q, static_cast<int>(z.cols()) - 1).value(z);
}

PathResult path_action_min(const PressureField& q, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& y, const PathOptions& opt,
                           const Path* warm_start) {
  if (opt.n_seg < 2) throw RangeError("path_action_min: n_seg must be at least 2");
  const ConvexDomain& dom = q.domain();
  if (!dom.contains(x, 1e-12) || !dom.contains(y, 1e-12))
    throw RangeError("path_action_min: endpoints must lie in the domain");
  const Action act(q, opt.n_seg);

  std::vector<Path> starts{straight_line(x, y, opt.n_seg)};
  if (opt.dp_restart) starts.push_back(dp_seed(q, x, y, opt));
  if (warm_start && warm_start->cols() == opt.n_seg + 1) {
    Path w = *warm_start;
    w.col(0) = x;
    w.col(opt.n_seg) = y;
    starts.push_back(w);
  }

  bool have = false;
  PathResult best;
  double fallback = std::numeric_limits<double>::infinity();
  for (Path& s : starts) {
    precondition_descend(act, dom, s, opt.tolerance);
    SpgOutcome o = spg(act, dom, s, opt);
    if (!o.converged) {
      fallback = std::min(fallback, o.value);
      continue;
    }
    if (!have || o.value < best.value) {
      best = {o.value, std::move(o.path), o.iterations, o.pg};
      have = true;
    }
  }
  if (!have)
    throw NonConvergence("path_action_min: projected gradient stayed above tolerance", fallback);
  return best;
}

FunctionalValue functional_value(const PressureField& q, const ParticleEndpoints& e,
                                 const PathOptions& opt, const std::vector<Path>* warm) {
  FunctionalValue out;
  const Eigen::VectorXd& w = q.integration_weights();
  const double dtl = (q.t1() - q.t0()) / q.n_time();
  for (int k = 0; k <= q.n_time(); ++k) {
    const double c = (k == 0 || k == q.n_time()) ? 0.5 : 1.0;
    out.space_time_integral += c * dtl * w.dot(q.values().col(k));
  }
  out.paths.resize(static_cast<std::size_t>(e.size()));
  Eigen::VectorXd actions(e.size());
  parallel_for(e.size(), [&](std::int64_t s) {
    const auto k = static_cast<std::size_t>(s);
    const Path* ws = warm && static_cast<Eigen::Index>(warm->size()) == e.size() ? &(*warm)[k] : nullptr;
    PathResult r = path_action_min(q, e.x.col(s), e.y.col(s), opt, ws);
    actions(s) = r.value;
    out.paths[k] = std::move(r.path);
  });
  out.action_sum = e.w.dot(actions);
  out.value = out.space_time_integral + out.action_sum;
  return out;
}

// ---------------------------------------------------------------- checks

SmallnessReport smallness_check(const PressureField& p, double t0, double t1) {
  const int n = p.n_space();
  const Eigen::Index s = n + 3;
  const double h = p.spacing();
  SmallnessReport rep;
  rep.lambda_max = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= p.n_time(); ++k) {
    const double* v = p.values().col(k).data();
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        const Eigen::Index c = (i + 1) + s * (j + 1);
        if (!p.domain().contains(p.node(c), 1e-12)) continue;
        const double dxx = (v[c + 1] - 2 * v[c] + v[c - 1]) / (h * h);
        const double dyy = (v[c + s] - 2 * v[c] + v[c - s]) / (h * h);
        const double dxy = (v[c + s + 1] - v[c + s - 1] - v[c - s + 1] + v[c - s - 1]) / (4 * h * h);
        const double lam = 0.5 * (dxx + dyy) + std::sqrt(0.25 * (dxx - dyy) * (dxx - dyy) + dxy * dxy);
        rep.lambda_max = std::max(rep.lambda_max, lam);
      }
  }
  const double len = t1 - t0;
  rep.margin = kPi * kPi - len * len * rep.lambda_max;
  rep.satisfied = rep.margin >= 0.0;
  return rep;
}

RotationSolution rigid_rotation_solution(double omega, double t0, double t1,
                                         const RotationOptions& opt) {
  const ConvexDomain disk = ConvexDomain::disk();
  PressureField p = PressureField::sample(disk, opt.n_space, opt.n_time, t0, t1,
                                          [&](double, const Eigen::Vector2d& x) {
                                            return 0.5 * omega * omega * x.squaredNorm();
                                          });
  p.normalize();
  ParticleEndpoints e = sample_endpoints(disk, opt.n_rings, opt.n_angles);
  const double turn = omega * (t1 - t0);
  const Eigen::Matrix2d rot = Eigen::Rotation2Dd(turn).toRotationMatrix();
  e.y = rot * e.x;

  double resid = 0.0;
  const int steps = opt.residual_steps;
  const double dt = (t1 - t0) / steps;
  auto at = [&](int j, const Eigen::Vector2d& x0) -> Eigen::Vector2d {
    return Eigen::Rotation2Dd(omega * j * dt).toRotationMatrix() * x0;
  };
  for (Eigen::Index s = 0; s < e.size(); ++s) {
    const Eigen::Vector2d x0 = e.x.col(s);
    for (int j = 1; j < steps; ++j) {
      const Eigen::Vector2d acc = (at(j + 1, x0) - 2 * at(j, x0) + at(j - 1, x0)) / (dt * dt);
      resid = std::max(resid, (acc + p.gradient(t0 + j * dt, at(j, x0))).norm());
    }
  }
  return {std::move(p), std::move(e), resid};
}

PressureField random_smooth_perturbation(const PressureField& like, double amplitude,
                                         std::mt19937_64& rng) {
  constexpr int kModes = 4;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> wave(-1, 1);
  std::uniform_int_distribution<int> tw(0, 2);
  std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
  struct Mode {
    double a;
    Eigen::Vector2d k;
    double phi;
    int l;
    double psi;
  };
  std::vector<Mode> modes;
  for (int m = 0; m < kModes; ++m) {
    Mode md{gauss(rng), Eigen::Vector2d::Zero(), phase(rng), tw(rng), phase(rng)};
    do {
      md.k = Eigen::Vector2d(wave(rng), wave(rng));
    } while (md.k.isZero());
    modes.push_back(md);
  }
  const double span = like.t1() - like.t0();
  const double width = like.domain().upper().x() - like.domain().lower().x();
  PressureField d = PressureField::sample(
      like.domain(), like.n_space(), like.n_time(), like.t0(), like.t1(),
      [&](double t, const Eigen::Vector2d& x) {
        double v = 0.0;
        for (const auto& md : modes)
          v += md.a * std::cos(kPi * md.k.dot(x) / width * 2 + md.phi) *
               std::cos(kPi * md.l * (t - like.t0()) / span + md.psi);
        return v;
      });
  d.normalize();
  double peak = 0.0;
  for (Eigen::Index c = 0; c < d.node_count(); ++c)
    if (d.domain().contains(d.node(c), 1e-12)) peak = std::max(peak, d.values().row(c).cwiseAbs().maxCoeff());
  if (peak > 0.0) d *= amplitude / peak;
  return d;
}

MaximizerReport maximizer_margin(
    const PressureField& p, const std::vector<PressureField>& perturbations,
    const ParticleEndpoints& e, const PathOptions& opt,
    const std::function<Eigen::Vector2d(double, const Eigen::Vector2d&)>& trajectory) {
  const SmallnessReport small = smallness_check(p, p.t0(), p.t1());
  if (!small.satisfied)
    throw SmallnessViolation("maximizer_margin: (t1 - t0)^2 D^2 p exceeds pi^2");

  MaximizerReport rep;
  FunctionalValue base = functional_value(p, e, opt);
  rep.base_value = base.value;

  PathOptions fine = opt;
  fine.n_seg = 2 * opt.n_seg;
  std::vector<Path> upsampled;
  for (const Path& z : base.paths) upsampled.push_back(resample(z, fine.n_seg));
  rep.refined_value = functional_value(p, e, fine, &upsampled).value;
  rep.path_error = std::abs(rep.base_value - rep.refined_value);

  rep.differences.resize(static_cast<Eigen::Index>(perturbations.size()));
  rep.margin = perturbations.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < perturbations.size(); ++i) {
    const PressureField q = p + perturbations[i];
    const double v = functional_value(q, e, opt, &base.paths).value;
    rep.differences(static_cast<Eigen::Index>(i)) = rep.base_value - v;
    rep.margin = std::min(rep.margin, rep.base_value - v);

    if (trajectory) {
      // Simpson rule in time along the exact particle paths
      constexpr int kSub = 64;
      const double dt = (p.t1() - p.t0()) / kSub;
      double total = 0.0;
      for (Eigen::Index s = 0; s < e.size(); ++s) {
        double acc = 0.0;
        for (int j = 0; j <= kSub; ++j) {
          const double t = p.t0() + j * dt;
          const double c = (j == 0 || j == kSub) ? 1.0 : (j % 2 ? 4.0 : 2.0);
          acc += c * perturbations[i](t, trajectory(t, e.x.col(s)));
        }
        total += e.w(s) * acc * dt / 3.0;
      }
      rep.quadrature_error = std::max(rep.quadrature_error, std::abs(total));
    }
  }
  rep.eps_disc = rep.path_error + rep.quadrature_error;
  rep.base_paths = std::move(base.paths);
  return rep;
}

ConcavityReport concavity_midpoint_check(const PressureField& p,
                                         const std::vector<PressureField>& perturbations,
                                         const MaximizerReport& report,
                                         const ParticleEndpoints& e, int n_pairs,
                                         std::uint64_t seed, const PathOptions& opt) {
  const int m = static_cast<int>(perturbations.size());
  if (m < 2) throw RangeError("concavity_midpoint_check: need at least two perturbations");
  if (report.differences.size() != m)
    throw DimensionMismatch("concavity_midpoint_check: report does not match the perturbations");
  ConcavityReport rep;
  rep.tolerance = report.eps_disc;
  rep.worst_gap = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, m - 1);
  for (int k = 0; k < n_pairs; ++k) {
    const int a = pick(rng);
    int b = pick(rng);
    while (b == a) b = pick(rng);
    PressureField mid = p + 0.5 * (perturbations[a] + perturbations[b]);
    const double fm = functional_value(mid, e, opt, &report.base_paths).value;
    const double fa = report.base_value - report.differences(a);
    const double fb = report.base_value - report.differences(b);
    const double gap = fm - 0.5 * (fa + fb);
    rep.worst_gap = std::min(rep.worst_gap, gap);
    if (gap < -rep.tolerance) ++rep.violations;
    ++rep.pairs;
  }
  return rep;
}

}  // namespace cpde
