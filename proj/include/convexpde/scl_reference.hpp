#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "convexpde/scl_grid.hpp"

namespace cpde {

template <int Dim>
struct FiniteVolumeState {
  CellAverages<Dim> u;
  double t = 0.0;
  double cfl = 0.0;  // dt * L / h of the last step
};

/// Snapshots u(t_n) of a 1D or 2D run together with the flux that drives it.
template <int Dim>
struct Trajectory {
  PeriodicGrid<Dim> grid;
  FluxVector<Dim> flux;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// One Godunov step (dimensional splitting in 2D, x then y). Throws
/// CFLViolation if dt * L > h for any axis.
template <int Dim>
FiniteVolumeState<Dim> godunov_step(const FiniteVolumeState<Dim>& s, double dt,
                                    const FluxArg<Dim>& flux);

/// ceil(T / dt) equal Godunov steps of length T / ceil(T / dt).
template <int Dim>
CellAverages<Dim> godunov_solve(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux, double T,
                                double dt,
                                const std::function<void(int, double, const CellAverages<Dim>&)>&
                                    observer = nullptr);

/// godunov_solve keeping every step as a snapshot.
template <int Dim>
Trajectory<Dim> godunov_trajectory(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux,
                                   double T, double dt);

/// Kruzhkov entropy pair for level k: U(v) = |v - k|, Z(v) = sign(v - k)(F(v) - F(k)).
/// The inequality dU/dt + dZ/dx <= 0 is tested in integrated cell form,
///   R_i = h (U_i(T) - U_i(0)) + sum_n dt_n (G_{i+1/2} - G_{i-1/2}),
/// with G the numerical entropy flux g(u v k, w v k) - g(u ^ k, w ^ k) of
/// the Godunov flux g. The result is sum_i max(R_i, 0) / (t_N - t_0): the
/// largest violation over cellwise test functions with values in [0, 1],
/// per unit time. 1D only; needs at least two snapshots.
double entropy_residual(const Trajectory<1>& trajectory, double k);

/// sum |u - v| * cell volume. Throws GridMismatch.
template <int Dim>
double l1_distance(const CellAverages<Dim>& u, const CellAverages<Dim>& v);

}  // namespace cpde
