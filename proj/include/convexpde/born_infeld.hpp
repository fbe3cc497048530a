#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "convexpde/errors.hpp"

namespace cpde {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Vec10 = Eigen::Matrix<Scalar, 10, 1>;

/// Augmented Born-Infeld state. Packed order: h, Q1..Q3, D1..D3, B1..B3.
template <typename Scalar>
struct ABIStateT {
  Scalar h = Scalar(1);
  Vec3<Scalar> Q = Vec3<Scalar>::Zero();
  Vec3<Scalar> D = Vec3<Scalar>::Zero();
  Vec3<Scalar> B = Vec3<Scalar>::Zero();

  Vec10<Scalar> packed() const {
    Vec10<Scalar> v;
    v << h, Q, D, B;
    return v;
  }
  static ABIStateT unpack(const Vec10<Scalar>& v) {
    return {v(0), v.template segment<3>(1), v.template segment<3>(4), v.template segment<3>(7)};
  }
};

using ABIState = ABIStateT<double>;

/// Point of the BI manifold: h = sqrt(1 + D^2 + B^2 + (D x B)^2), Q = D x B.
template <typename Scalar>
ABIStateT<Scalar> bi_embed(const Vec3<Scalar>& D, const Vec3<Scalar>& B) {
  using std::sqrt;
  const Vec3<Scalar> q = D.cross(B);
  return {sqrt(Scalar(1) + D.squaredNorm() + B.squaredNorm() + q.squaredNorm()), q, D, B};
}

/// Flux of (h, Q, D, B) in the x1 direction. The grad(1/h) source enters
/// the Q flux as -(1/h) e1; B1 and D1 carry zero flux.
template <typename Scalar>
Vec10<Scalar> abi_flux(const ABIStateT<Scalar>& s) {
  if (!(s.h > Scalar(0))) throw NonpositiveDensity("abi_flux: h must be positive");
  const Scalar inv = Scalar(1) / s.h;
  const Vec3<Scalar> e = (s.B.cross(s.Q) + s.D) * inv;  // curl partner of B
  const Vec3<Scalar> m = (s.D.cross(s.Q) - s.B) * inv;  // curl partner of D
  Vec10<Scalar> f;
  f(0) = s.Q(0);
  f.template segment<3>(1) = (s.Q(0) * s.Q - s.B(0) * s.B - s.D(0) * s.D) * inv;
  f(1) -= inv;
  f.template segment<3>(4) << Scalar(0), -m(2), m(1);
  f.template segment<3>(7) << Scalar(0), -e(2), e(1);
  return f;
}

/// Extra entropy U = (1 + D^2 + B^2 + Q^2) / h.
template <typename Scalar>
Scalar energy_U(const ABIStateT<Scalar>& s) {
  if (!(s.h > Scalar(0))) throw NonpositiveDensity("energy_U: h must be positive");
  return (Scalar(1) + s.D.squaredNorm() + s.B.squaredNorm() + s.Q.squaredNorm()) / s.h;
}

/// max(0, sqrt(1 + D^2 + B^2 + Q^2 + 2 |D x B - Q|) - h); zero inside the
/// convex hull of the BI manifold.
template <typename Scalar>
Scalar hull_residual(const ABIStateT<Scalar>& s) {
  using std::sqrt;
  const Scalar rhs = sqrt(Scalar(1) + s.D.squaredNorm() + s.B.squaredNorm() + s.Q.squaredNorm() +
                          Scalar(2) * (s.D.cross(s.B) - s.Q).norm());
  return rhs > s.h ? rhs - s.h : Scalar(0);
}

/// |h - sqrt(1 + D^2 + B^2 + (D x B)^2)| + |Q - D x B|.
template <typename Scalar>
Scalar manifold_defect(const ABIStateT<Scalar>& s) {
  using std::abs;
  const ABIStateT<Scalar> m = bi_embed(s.D, s.B);
  return abs(s.h - m.h) + (s.Q - m.Q).norm();
}

/// (h, Q, D, B) -> (h, Q - h u, D, B).
template <typename Scalar>
ABIStateT<Scalar> galilean_boost(ABIStateT<Scalar> s, const Vec3<Scalar>& u) {
  s.Q -= s.h * u;
  return s;
}

/// Wave-speed bound |Q1| / h + 1 + 0.2 used by the Rusanov scheme.
template <typename Scalar>
Scalar wave_speed_bound(const ABIStateT<Scalar>& s) {
  using std::abs;
  return abs(s.Q(0)) / s.h + Scalar(1.2);
}

/// Plane-wave field on the periodic unit interval, one column per cell.
/// B1 and D1 are the same constant in every cell.
struct ABIField1D {
  Eigen::Matrix<double, 10, Eigen::Dynamic> values;
  double B1_const = 0.0;
  double D1_const = 0.0;

  ABIField1D() = default;
  /// n copies of `s`; the constants are taken from s.B(0), s.D(0).
  ABIField1D(int n, const ABIState& s);

  int cells() const { return static_cast<int>(values.cols()); }
  double dx() const { return 1.0 / cells(); }
  double center(int i) const { return (i + 0.5) * dx(); }
  ABIState state(int i) const { return ABIState::unpack(values.col(i)); }
  void set_state(int i, const ABIState& s) { values.col(i) = s.packed(); }
  /// Throws InvariantViolation if B1 or D1 differ from the constants.
  void check_constraints() const;
  Vec10<double> sums() const { return values.rowwise().sum(); }
};

/// Cell values of bi_embed(D(x), B(x)) for
/// D = (0, A sin 2 pi k x, 0), B = (0, 0, A cos 2 pi k x).
ABIField1D manifold_sine(int n, double amplitude, int k);
/// h, Q1 piecewise constant: left values on [0, 1/2), right on [1/2, 1).
ABIField1D chaplygin_riemann(int n, double hL, double QL, double hR, double QR);
ABIField1D rest_field(int n);
/// "rest", "manifold-sine A k", "chaplygin-riemann hL QL hR QR",
/// "boosted <profile> u" (boost by (u, 0, 0)).
ABIField1D parse_profile(const std::string& descriptor, int n);

ABIField1D galilean_boost(const ABIField1D& f, const Vec3<double>& u);

struct StepMonitor {
  /// Largest |eigenvalue| of a finite-difference flux Jacobian over the
  /// sampled cells, and the bound it is compared against.
  double spectral_estimate = 0.0;
  double speed_bound = 0.0;
  bool bound_exceeded = false;
};

struct StepOptions {
  /// Estimate the flux-Jacobian spectrum after the step (costly).
  bool monitor = false;
  /// Cells between sampled spectra when monitoring.
  int monitor_stride = 1;
};

/// One Rusanov step with local speed max(lambda_i, lambda_{i+1}),
/// lambda = wave_speed_bound. Throws CFLViolation if dt * max lambda > dx
/// and PositivityLoss if some h becomes nonpositive.
ABIField1D fv_step(const ABIField1D& f, double dt, const StepOptions& opt = {},
                   StepMonitor* monitor = nullptr);

/// dx / max_i lambda_i.
double max_stable_dt(const ABIField1D& f);

double manifold_residual(const ABIField1D& f);
double hull_residual(const ABIField1D& f);
/// sum_i U_i dx.
double total_energy(const ABIField1D& f);

/// Largest |eigenvalue| of the central-difference Jacobian of abi_flux at s.
double flux_spectral_radius(const ABIState& s);

}  // namespace cpde
