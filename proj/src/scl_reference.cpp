#include "convexpde/scl_reference.hpp"

#include <algorithm>
#include <cmath>

#include "convexpde/scl_lift.hpp"

namespace cpde {

namespace {

// conservative update along one axis with interface fluxes g(u_i, u_{i+1})
template <int Dim>
void sweep(const Eigen::VectorXd& in, Eigen::VectorXd& out, int n, int axis, double lambda,
           const FluxLaw& f) {
  const Eigen::Index lines = Dim == 1 ? 1 : n;
  Eigen::VectorXd g(n);
  for (Eigen::Index line = 0; line < lines; ++line) {
    auto at = [&](Eigen::Index i) { return axis == 0 ? i + n * line : line + n * i; };
    for (Eigen::Index i = 0; i < n; ++i) g(i) = f.godunov(in(at(i)), in(at((i + 1) % n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double left = g((i + n - 1) % n);
      out(at(i)) = in(at(i)) - lambda * (g(i) - left);
    }
  }
}

}  // namespace

template <int Dim>
FiniteVolumeState<Dim> godunov_step(const FiniteVolumeState<Dim>& s, double dt,
                                    const FluxArg<Dim>& flux) {
  const double h = s.u.grid.h();
  double courant = 0.0;
  for (int axis = 0; axis < Dim; ++axis) courant = std::max(courant, dt * flux[axis].lipschitz_bound() / h);
  if (courant > 1.0 + 1e-12) throw CFLViolation("godunov_step: dt * L exceeds the cell width");
  FiniteVolumeState<Dim> next{s.u, s.t + dt, courant};
  Eigen::VectorXd tmp(s.u.u.size());
  for (int axis = 0; axis < Dim; ++axis) {
    sweep<Dim>(next.u.u, tmp, s.u.grid.n, axis, dt / h, flux[axis]);
    next.u.u.swap(tmp);
  }
  return next;
}

template <int Dim>
CellAverages<Dim> godunov_solve(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux, double T,
                                double dt,
                                const std::function<void(int, double, const CellAverages<Dim>&)>&
                                    observer) {
  if (u0.u.size() != u0.grid.cells()) throw GridMismatch("godunov_solve: field size differs from grid");
  const int steps = step_count(T, dt);
  const double step = steps > 0 ? T / steps : 0.0;
  FiniteVolumeState<Dim> s{u0, 0.0, 0.0};
  for (int n = 0; n < steps; ++n) {
    s = godunov_step(s, step, flux);
    s.t = (n + 1) * step;
    if (observer) observer(n + 1, s.t, s.u);
  }
  return s.u;
}

template <int Dim>
Trajectory<Dim> godunov_trajectory(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux,
                                   double T, double dt) {
  Trajectory<Dim> tr{u0.grid, flux, {0.0}, {u0.u}};
  godunov_solve<Dim>(u0, flux, T, dt, [&](int, double t, const CellAverages<Dim>& u) {
    tr.times.push_back(t);
    tr.states.push_back(u.u);
  });
  return tr;
}

double entropy_residual(const Trajectory<1>& tr, double k) {
  if (tr.states.size() < 2 || tr.times.size() != tr.states.size())
    throw RangeError("entropy_residual: need at least two snapshots with times");
  const int n = tr.grid.n;
  const double h = tr.grid.h();
  const FluxLaw& f = tr.flux[0];
  for (const auto& s : tr.states)
    if (s.size() != n) throw GridMismatch("entropy_residual: snapshot size differs from grid");

  Eigen::VectorXd r = h * ((tr.states.back().array() - k).abs() - (tr.states.front().array() - k).abs()).matrix();
  Eigen::VectorXd g(n);
  for (std::size_t s = 0; s + 1 < tr.states.size(); ++s) {
    const double dt = tr.times[s + 1] - tr.times[s];
    const Eigen::VectorXd& u = tr.states[s];
    for (int i = 0; i < n; ++i) {
      const double a = u(i), b = u((i + 1) % n);
      g(i) = f.godunov(std::max(a, k), std::max(b, k)) - f.godunov(std::min(a, k), std::min(b, k));
    }
    for (int i = 0; i < n; ++i) r(i) += dt * (g(i) - g((i + n - 1) % n));
  }
  const double span = tr.times.back() - tr.times.front();
  return r.cwiseMax(0.0).sum() / span;
}

template <int Dim>
double l1_distance(const CellAverages<Dim>& u, const CellAverages<Dim>& v) {
  if (!(u.grid == v.grid) || u.u.size() != v.u.size())
    throw GridMismatch("l1_distance: fields live on different grids");
  return (u.u - v.u).cwiseAbs().sum() * u.grid.cell_volume();
}

#define CPDE_INSTANTIATE(D)                                                                        \
  template FiniteVolumeState<D> godunov_step<D>(const FiniteVolumeState<D>&, double,                  \
                                             const FluxVector<D>&);                                \
  template CellAverages<D> godunov_solve<D>(                                                          \
      const CellAverages<D>&, const FluxVector<D>&, double, double,                                \
      const std::function<void(int, double, const CellAverages<D>&)>&);                            \
  template Trajectory<D> godunov_trajectory<D>(const CellAverages<D>&, const FluxVector<D>&, double,  \
                                            double);                                               \
  template double l1_distance<D>(const CellAverages<D>&, const CellAverages<D>&);
CPDE_INSTANTIATE(1)
CPDE_INSTANTIATE(2)
#undef CPDE_INSTANTIATE

}  // namespace cpde
