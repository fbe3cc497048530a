#include "convexpde/scl_lift.hpp"

#include <cmath>

#include "convexpde/pav.hpp"

namespace cpde {

namespace {

inline Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// out(i) = (1 - theta) in(i - p) + theta in(i - p - 1) along one axis
template <int Dim>
void shift_axis(const Eigen::VectorXd& in, Eigen::VectorXd& out, int n, int axis, long p,
                double theta) {
  const Eigen::Index rows = Dim == 1 ? 1 : n;  // lines orthogonal to the axis
  for (Eigen::Index line = 0; line < rows; ++line) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index a = wrap(i - p, n);
      const Eigen::Index b = wrap(i - p - 1, n);
      const Eigen::Index ci = axis == 0 ? i + n * line : line + n * i;
      const Eigen::Index ca = axis == 0 ? a + n * line : line + n * a;
      const Eigen::Index cb = axis == 0 ? b + n * line : line + n * b;
      out(ci) = theta == 0.0 ? in(ca) : (1.0 - theta) * in(ca) + theta * in(cb);
    }
  }
}

void split_shift(double s, long& p, double& theta) {
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-12) {
    p = static_cast<long>(r);
    theta = 0.0;
    return;
  }
  const double f = std::floor(s);
  p = static_cast<long>(f);
  theta = s - f;
}

template <int Dim, typename ShiftFor>
LevelField<Dim> shift_slices(const LevelField<Dim>& y, ShiftFor&& shift_for) {
  LevelField<Dim> out{y.grid, Eigen::MatrixXd(y.values.rows(), y.values.cols())};
  const int n = y.grid.n;
  Eigen::VectorXd a(y.values.cols()), b(y.values.cols());
  for (int k = 0; k < y.n_a(); ++k) {
    a = y.values.row(k).transpose();
    for (int axis = 0; axis < Dim; ++axis) {
      long p;
      double theta;
      shift_for(k, axis, p, theta);
      if (p == 0 && theta == 0.0) continue;
      shift_axis<Dim>(a, b, n, axis, p, theta);
      a.swap(b);
    }
    out.values.row(k) = a.transpose();
  }
  return out;
}

}  // namespace

template <int Dim>
Eigen::VectorXd LevelField<Dim>::levels() const {
  Eigen::VectorXd a(n_a());
  for (int k = 0; k < n_a(); ++k) a(k) = level(k);
  return a;
}

template <int Dim>
bool LevelField<Dim>::is_monotone() const {
  for (Eigen::Index c = 0; c < values.cols(); ++c)
    for (Eigen::Index k = 1; k < values.rows(); ++k)
      if (values(k, c) < values(k - 1, c)) return false;
  return true;
}

template <int Dim>
LevelField<Dim> lift(const CellAverages<Dim>& u0, int n_a) {
  if (n_a < 2) throw RangeError("lift: n_a must be at least 2");
  if (u0.u.size() != u0.grid.cells()) throw GridMismatch("lift: field size differs from grid");
  for (Eigen::Index c = 0; c < u0.u.size(); ++c)
    if (!(u0.u(c) >= 0.0 && u0.u(c) <= 1.0)) throw RangeError("lift: u0 must lie in [0, 1]");
  LevelField<Dim> y{u0.grid, Eigen::MatrixXd(n_a, u0.u.size())};
  const Eigen::VectorXd a = y.levels();
  y.values = a.replicate(1, u0.u.size());
  y.values.rowwise() -= u0.u.transpose();
  return y;
}

template <int Dim>
LevelField<Dim> transport_step(const LevelField<Dim>& y, double dt, const FluxArg<Dim>& flux) {
  const double h = y.grid.h();
  return shift_slices(y, [&](int k, int axis, long& p, double& theta) {
    split_shift(dt * flux[axis].Fprime(y.level(k)) / h, p, theta);
  });
}

template <int Dim>
LevelField<Dim> transport_step_aligned(const LevelField<Dim>& y, double t0, double t1,
                                       const FluxArg<Dim>& flux) {
  const double h = y.grid.h();
  return shift_slices(y, [&](int k, int axis, long& p, double& theta) {
    const double v = flux[axis].Fprime(y.level(k)) / h;
    p = static_cast<long>(std::floor(t1 * v + 0.5)) - static_cast<long>(std::floor(t0 * v + 0.5));
    theta = 0.0;
  });
}

template <int Dim>
LevelField<Dim> monotone_project(const LevelField<Dim>& y) {
  LevelField<Dim> out = y;
  for (Eigen::Index c = 0; c < out.values.cols(); ++c) pav_project(out.values.col(c));
  return out;
}

template <int Dim>
CellAverages<Dim> reconstruct(const LevelField<Dim>& y) {
  if (!y.is_monotone()) throw NotMonotone("reconstruct: level field is not nondecreasing in a");
  CellAverages<Dim> u{y.grid, Eigen::VectorXd(y.values.cols())};
  for (Eigen::Index c = 0; c < y.values.cols(); ++c)
    u.u(c) = static_cast<double>((y.values.col(c).array() < 0.0).count()) / y.n_a();
  return u;
}

int step_count(double T, double dt) {
  if (!(dt > 0.0)) throw RangeError("time step must be positive");
  if (!(T >= 0.0)) throw RangeError("final time must be nonnegative");
  return static_cast<int>(std::max(0.0, std::ceil(T / dt - 1e-9)));
}

template <int Dim>
CellAverages<Dim> evolve(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux, double T,
                         double dt, int n_a, const EvolveOptions<Dim>& opt) {
  const int steps = step_count(T, dt);
  LevelField<Dim> y = lift(u0, n_a);
  const double step = steps > 0 ? T / steps : 0.0;
  for (int s = 0; s < steps; ++s) {
    const double t0 = s * step;
    const double t1 = (s + 1) * step;
    y = opt.mode == TransportMode::GridAligned ? transport_step_aligned(y, t0, t1, flux)
                                               : transport_step(y, step, flux);
    y = monotone_project(y);
    if (opt.observer) opt.observer(s + 1, t1, y);
  }
  return reconstruct(y);
}

#define CPDE_INSTANTIATE(D)                                                                        \
  template struct LevelField<D>;                                                                   \
  template LevelField<D> lift<D>(const CellAverages<D>&, int);                                        \
  template LevelField<D> transport_step<D>(const LevelField<D>&, double, const FluxVector<D>&);       \
  template LevelField<D> transport_step_aligned<D>(const LevelField<D>&, double, double,              \
                                                const FluxVector<D>&);                             \
  template LevelField<D> monotone_project<D>(const LevelField<D>&);                                   \
  template CellAverages<D> reconstruct<D>(const LevelField<D>&);                                      \
  template CellAverages<D> evolve<D>(const CellAverages<D>&, const FluxVector<D>&, double, double,    \
                                  int, const EvolveOptions<D>&);
CPDE_INSTANTIATE(1)
CPDE_INSTANTIATE(2)
#undef CPDE_INSTANTIATE

}  // namespace cpde
