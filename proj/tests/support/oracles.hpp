#pragma once

// Independent reference computations for the test suites. None of these
// call into the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// min over permutations s of sum_i |x_i - y_s(i)|^2 / 2 for two equal-size
/// point sets with unit weights (columns are points).
inline double permutation_ot_cost(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const int n = static_cast<int>(x.cols());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += 0.5 * (x.col(i) - y.col(perm[i])).squaredNorm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Optimal quadratic cost on the line by the north-west corner rule on
/// sorted atoms (the monotone coupling).
inline double monotone_ot_cost_1d(std::vector<double> x, std::vector<double> wx,
                                  std::vector<double> y, std::vector<double> wy) {
  auto sort_by = [](std::vector<double>& p, std::vector<double>& w) {
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> p2, w2;
    for (auto i : idx) {
      p2.push_back(p[i]);
      w2.push_back(w[i]);
    }
    p = p2;
    w = w2;
  };
  sort_by(x, wx);
  sort_by(y, wy);
  std::size_t i = 0, j = 0;
  double cost = 0.0;
  while (i < x.size() && j < y.size()) {
    const double m = std::min(wx[i], wy[j]);
    cost += 0.5 * m * (x[i] - y[j]) * (x[i] - y[j]);
    wx[i] -= m;
    wy[j] -= m;
    if (wx[i] <= 1e-15) ++i;
    if (wy[j] <= 1e-15) ++j;
  }
  return cost;
}

/// Weighted L2 projection onto nondecreasing sequences by enumerating every
/// partition into contiguous blocks, replacing each block by its weighted
/// mean, and keeping the best monotone candidate. Exponential; n <= 12.
inline std::vector<double> isotonic_by_partitions(const std::vector<double>& v,
                                                  const std::vector<double>& w) {
  const int n = static_cast<int>(v.size());
  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> cand(n);
    int start = 0;
    for (int i = 0; i < n; ++i) {
      const bool cut = i == n - 1 || (mask >> i & 1u);
      if (!cut) continue;
      double sw = 0.0, sv = 0.0;
      for (int k = start; k <= i; ++k) {
        sw += w[k];
        sv += w[k] * v[k];
      }
      for (int k = start; k <= i; ++k) cand[k] = sv / sw;
      start = i + 1;
    }
    bool mono = true;
    for (int i = 0; i + 1 < n; ++i) mono = mono && cand[i] <= cand[i + 1];
    if (!mono) continue;
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += w[i] * (cand[i] - v[i]) * (cand[i] - v[i]);
    if (obj < best_obj) {
      best_obj = obj;
      best = cand;
    }
  }
  return best;
}

/// Classical action of the planar harmonic oscillator,
/// inf over paths of int_0^T (|z'|^2 / 2 - w^2 |z|^2 / 2 + offset) dt,
/// from x to y, valid for w T < pi.
inline double oscillator_action(double w, double T, const Eigen::Vector2d& x,
                                const Eigen::Vector2d& y, double offset) {
  const double s = std::sin(w * T), c = std::cos(w * T);
  return w / (2 * s) * ((x.squaredNorm() + y.squaredNorm()) * c - 2 * x.dot(y)) + offset * T;
}

/// Discrete action |dz|^2 / (2 dt) - dt sum c_k q(t_k, z_k), trapezoid c_k.
inline double discrete_action(const std::function<double(double, const Eigen::Vector2d&)>& q,
                              double t0, double t1, const Eigen::Matrix2Xd& z) {
  const int n = static_cast<int>(z.cols()) - 1;
  const double dt = (t1 - t0) / n;
  double kin = 0.0, pot = 0.0;
  for (int k = 0; k < n; ++k) kin += (z.col(k + 1) - z.col(k)).squaredNorm();
  for (int k = 0; k <= n; ++k) pot += ((k == 0 || k == n) ? 0.5 : 1.0) * q(t0 + k * dt, z.col(k));
  return kin / (2 * dt) - dt * pot;
}

/// Exhaustive dynamic programming over lattice paths: every interior node
/// on `points`, `steps` segments. Returns the best discrete action, an upper
/// bound for the continuous-node minimum with the same segment count.
inline double lattice_path_min(const std::function<double(double, const Eigen::Vector2d&)>& q,
                               double t0, double t1, const Eigen::Vector2d& x,
                               const Eigen::Vector2d& y, const std::vector<Eigen::Vector2d>& points,
                               int steps) {
  const double dt = (t1 - t0) / steps;
  const int m = static_cast<int>(points.size());
  std::vector<double> cost(m), next(m);
  for (int a = 0; a < m; ++a)
    cost[a] = (points[a] - x).squaredNorm() / (2 * dt) - dt * q(t0 + dt, points[a]);
  for (int k = 2; k < steps; ++k) {
    for (int b = 0; b < m; ++b) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m; ++a) best = std::min(best, cost[a] + (points[b] - points[a]).squaredNorm() / (2 * dt));
      next[b] = best - dt * q(t0 + k * dt, points[b]);
    }
    std::swap(cost, next);
  }
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m; ++a) best = std::min(best, cost[a] + (y - points[a]).squaredNorm() / (2 * dt));
  return best - dt * 0.5 * (q(t0, x) + q(t1, y));
}

/// Exact entropy solution of Burgers' equation for u0 = 1 on [a, b), 0
/// elsewhere on the real line: a rarefaction fan from a and a shock from b
/// moving at speed 1/2, until they interact.
inline double burgers_box(double x, double t, double a, double b) {
  if (t <= 0) return (x >= a && x < b) ? 1.0 : 0.0;
  const double shock = b + 0.5 * t;
  if (x < a || x >= shock) return 0.0;
  if (x < a + t) return (x - a) / t;
  return 1.0;
}

/// Planted expansion shock for Burgers: the indicator of
/// [0.25 + t/2, 0.75 + t/2) on the unit torus, sampled at cell centers at
/// every time in `times`. Its left jump goes from 0 up to 1, which the
/// entropy condition forbids.
inline std::vector<Eigen::VectorXd> planted_expansion_shock(int cells, const std::vector<double>& times) {
  std::vector<Eigen::VectorXd> out;
  for (double t : times) {
    Eigen::VectorXd u(cells);
    for (int i = 0; i < cells; ++i) {
      const double x = (i + 0.5) / cells;
      const double lo = 0.25 + 0.5 * t;
      const double s = x - lo - std::floor(x - lo);  // periodic offset from lo
      u(i) = s < 0.5 ? 1.0 : 0.0;
    }
    out.push_back(u);
  }
  return out;
}

/// x1-flux of the augmented Born-Infeld system assembled from the tensor
/// forms with explicit Levi-Civita sums: curl V = d_j (eps_ijk V_k), so the
/// x1 flux of a curl law is eps_i1k V_k. Packed as h, Q, D, B.
inline Eigen::Matrix<long double, 10, 1> abi_flux_tensor(long double h, const Eigen::Vector3d& Qd,
                                                        const Eigen::Vector3d& Dd,
                                                        const Eigen::Vector3d& Bd) {
  using V = Eigen::Matrix<long double, 3, 1>;
  const V Q = Qd.cast<long double>(), D = Dd.cast<long double>(), B = Bd.cast<long double>();
  auto eps = [](int i, int j, int k) -> long double {
    return static_cast<long double>((i - j) * (j - k) * (k - i)) / 2.0L;
  };
  auto cross = [&](const V& a, const V& b) {
    V c = V::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c(i) += eps(i, j, k) * a(j) * b(k);
    return c;
  };
  const V E = (cross(B, Q) + D) / h;  // d_t B + curl E = 0
  const V H = (cross(D, Q) - B) / h;  // d_t D + curl H = 0
  Eigen::Matrix<long double, 10, 1> f;
  f(0) = Q(0);
  for (int i = 0; i < 3; ++i) {
    // (Q x Q - B x B - D x D) / h - (1/h) I, row 1 (tensor products)
    f(1 + i) = (Q(0) * Q(i) - B(0) * B(i) - D(0) * D(i)) / h - (i == 0 ? 1.0L / h : 0.0L);
    long double fd = 0.0L, fb = 0.0L;
    for (int k = 0; k < 3; ++k) {
      fd += eps(i, 0, k) * H(k);
      fb += eps(i, 0, k) * E(k);
    }
    f(4 + i) = fd;
    f(7 + i) = fb;
  }
  return f;
}

}  // namespace oracle
