#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "convexpde/errors.hpp"

namespace cpde {

/// Unit disk centered at the origin, or the unit square [-1/2, 1/2]^2.
class ConvexDomain {
 public:
  enum class Kind { Disk, Box };

  static ConvexDomain disk() { return ConvexDomain(Kind::Disk); }
  static ConvexDomain box() { return ConvexDomain(Kind::Box); }

  Kind kind() const { return kind_; }
  bool contains(const Eigen::Vector2d& p, double slack = 0.0) const;
  /// Closest point of the closed domain.
  Eigen::Vector2d project(const Eigen::Vector2d& p) const;
  double area() const;
  Eigen::Vector2d lower() const;
  Eigen::Vector2d upper() const;
  /// Sampled midpoint-convexity test; returns the number of failures.
  int midpoint_failures(int samples, std::uint64_t seed) const;

 private:
  explicit ConvexDomain(Kind k) : kind_(k) {}
  Kind kind_;
};

/// Time-dependent scalar field on [t0, t1] x D. Values live on the nodes of
/// a uniform (n+1)^2 lattice over the bounding box of D plus one ghost
/// layer; nodes outside D carry a smooth extension. Space is interpolated
/// with C^1 Catmull-Rom cubics (exact on quadratics), time linearly between
/// the n_t + 1 levels t_k = t0 + k (t1 - t0) / n_t.
class PressureField {
 public:
  PressureField(const ConvexDomain& domain, int n_space, int n_time, double t0, double t1);

  template <typename Fn>
  static PressureField sample(const ConvexDomain& domain, int n_space, int n_time, double t0,
                              double t1, Fn&& f) {
    PressureField q(domain, n_space, n_time, t0, t1);
    for (int k = 0; k <= n_time; ++k)
      for (Eigen::Index c = 0; c < q.node_count(); ++c) q.values_(c, k) = f(q.time(k), q.node(c));
    return q;
  }

  const ConvexDomain& domain() const { return domain_; }
  int n_space() const { return n_; }
  int n_time() const { return n_t_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double time(int k) const { return t0_ + (t1_ - t0_) * k / n_t_; }
  double spacing() const { return h_; }

  /// Node layout: column k of values() is the time level k; row c the node
  /// with lattice index (c % (n+3) - 1, c / (n+3) - 1).
  Eigen::Index node_count() const { return static_cast<Eigen::Index>(n_ + 3) * (n_ + 3); }
  Eigen::Vector2d node(Eigen::Index c) const;
  Eigen::MatrixXd& values() { return values_; }
  const Eigen::MatrixXd& values() const { return values_; }

  double operator()(double t, const Eigen::Vector2d& x) const;
  Eigen::Vector2d gradient(double t, const Eigen::Vector2d& x) const;
  /// Value and gradient in one pass.
  double eval(double t, const Eigen::Vector2d& x, Eigen::Vector2d* grad) const;

  /// Mean over D of the interpolant at level k: weights . values.col(k) / |D|.
  double mean(int k) const;
  /// Integral over D of the interpolant, per unit nodal value.
  const Eigen::VectorXd& integration_weights() const { return *weights_; }
  /// Subtract the mean at every time level.
  void normalize();
  double max_abs_mean() const;

  /// Same lattice, domain and time grid.
  bool same_layout(const PressureField& o) const;
  PressureField& operator+=(const PressureField& o);
  PressureField& operator*=(double s);
  friend PressureField operator+(PressureField a, const PressureField& b) { return a += b; }
  friend PressureField operator*(double s, PressureField a) { return a *= s; }

 private:
  ConvexDomain domain_;
  int n_, n_t_;
  double t0_, t1_;
  double h_;
  Eigen::Vector2d lo_;
  Eigen::MatrixXd values_;
  std::shared_ptr<const Eigen::VectorXd> weights_;
};

/// Samples (x_s, y_s) = (g_t0(x), g_t1(x)) with quadrature weights.
struct ParticleEndpoints {
  Eigen::Matrix2Xd x;
  Eigen::Matrix2Xd y;
  Eigen::VectorXd w;
  Eigen::Index size() const { return x.cols(); }
};

/// Deterministic equal-weight points of D: for the disk, n_rings rings of
/// equal area with n_angles points each and alternating angular offsets;
/// for the box, an n_rings x n_angles midpoint lattice. y = x.
ParticleEndpoints sample_endpoints(const ConvexDomain& domain, int n_rings, int n_angles);

using Path = Eigen::Matrix2Xd;

struct PathOptions {
  int n_seg = 32;
  double tolerance = 1e-8;  // projected gradient 2-norm
  int max_iterations = 20000;
  /// Also start from a path found by coarse dynamic programming.
  bool dp_restart = true;
  int dp_grid = 11;   // lattice points per axis of the coarse search
  int dp_steps = 8;   // time steps of the coarse search
};

struct PathResult {
  double value = 0.0;
  Path path;  // 2 x (n_seg + 1), endpoints included
  int iterations = 0;
  double projected_gradient = 0.0;
};

/// Discrete action sum |z_{k+1} - z_k|^2 / (2 dt) - dt sum_k c_k q(t_k, z_k)
/// (trapezoid weights c_k) over piecewise-linear paths from x at t0 to y at
/// t1 with interior nodes in D, minimized by spectral projected gradient
/// (Barzilai-Borwein steps, nonmonotone line search) from the straight line,
/// optionally a DP-seeded path and an optional warm start; the best result
/// wins. Throws NonConvergence with the achieved value.
PathResult path_action_min(const PressureField& q, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& y, const PathOptions& opt = {},
                           const Path* warm_start = nullptr);

double path_action(const PressureField& q, const Path& z);

struct FunctionalValue {
  double value = 0.0;
  double space_time_integral = 0.0;  // int int q dt dx
  double action_sum = 0.0;           // sum_s w_s J_q(x_s, y_s)
  std::vector<Path> paths;
};

/// int_{t0}^{t1} int_D q dx dt + sum_s w_s J_q(x_s, y_s). `warm` optionally
/// holds one starting path per endpoint.
FunctionalValue functional_value(const PressureField& q, const ParticleEndpoints& endpoints,
                                 const PathOptions& opt = {},
                                 const std::vector<Path>* warm = nullptr);

struct SmallnessReport {
  bool satisfied = false;
  double margin = 0.0;      // pi^2 - (t1 - t0)^2 lambda_max
  double lambda_max = 0.0;  // over all time levels and lattice nodes in D
};

/// Central-difference Hessian at every node of D and time level.
SmallnessReport smallness_check(const PressureField& p, double t0, double t1);

struct RotationSolution {
  PressureField pressure;
  ParticleEndpoints endpoints;
  /// max over sample trajectories and interior times of
  /// |(g_{j+1} - 2 g_j + g_{j-1}) / dt^2 + grad p(g_j)|
  double euler_residual = 0.0;
};

struct RotationOptions {
  int n_space = 64;
  int n_time = 16;
  int n_rings = 10;
  int n_angles = 20;
  int residual_steps = 100;
};

/// Rigid rotation of the unit disk at angular speed omega with pressure
/// omega^2 |x|^2 / 2 minus its mean.
RotationSolution rigid_rotation_solution(double omega, double t0, double t1,
                                         const RotationOptions& opt = {});

/// Random smooth field: a few low Fourier modes in space with smooth time
/// factors, zero mean at every level, max |value| over nodes in D equal to
/// `amplitude`.
PressureField random_smooth_perturbation(const PressureField& like, double amplitude,
                                         std::mt19937_64& rng);

struct MaximizerReport {
  double margin = 0.0;  // min over perturbations of F(p) - F(p + delta)
  Eigen::VectorXd differences;  // F(p) - F(p + delta_i)
  double base_value = 0.0;      // F(p)
  double refined_value = 0.0;   // F(p) with 2 n_seg segments
  double path_error = 0.0;      // |F_n(p) - F_2n(p)|
  double quadrature_error = 0.0;  // max_i |sum_s w_s int delta_i(t, g_t(x_s)) dt|
  double eps_disc = 0.0;          // path_error + quadrature_error
  std::vector<Path> base_paths;
};

/// Requires smallness_check(p) to pass (SmallnessViolation otherwise).
/// `trajectory` maps (t, x_s) to g_t(x_s) for the quadrature estimate;
/// pass nullptr to skip it.
MaximizerReport maximizer_margin(
    const PressureField& p, const std::vector<PressureField>& perturbations,
    const ParticleEndpoints& endpoints, const PathOptions& opt = {},
    const std::function<Eigen::Vector2d(double, const Eigen::Vector2d&)>& trajectory = nullptr);

struct ConcavityReport {
  int pairs = 0;
  int violations = 0;       // pairs with gap below -tolerance
  double worst_gap = 0.0;   // min of F(mid) - (F(q_a) + F(q_b)) / 2
  double tolerance = 0.0;   // eps_disc of the report used
};

/// Midpoint concavity of the functional on random pairs q_a = p + delta_a,
/// q_b = p + delta_b, reusing F(q_a) from `report` (which must come from
/// maximizer_margin on the same perturbations).
ConcavityReport concavity_midpoint_check(const PressureField& p,
                                         const std::vector<PressureField>& perturbations,
                                         const MaximizerReport& report,
                                         const ParticleEndpoints& endpoints, int n_pairs,
                                         std::uint64_t seed, const PathOptions& opt = {});

}  // namespace cpde
