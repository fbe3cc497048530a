#pragma once

#include <functional>

#include <Eigen/Dense>

#include "convexpde/scl_grid.hpp"

namespace cpde {

/// Level-set lift Y(x, a) of a [0,1]-valued field. Row k holds the slice at
/// the midpoint level a_k = (k + 1/2) / n_a, column c the x-cell c.
template <int Dim>
struct LevelField {
  PeriodicGrid<Dim> grid;
  Eigen::MatrixXd values;  // n_a x cells

  int n_a() const { return static_cast<int>(values.rows()); }
  double level(int k) const { return (k + 0.5) / n_a(); }
  Eigen::VectorXd levels() const;
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
  /// Every column nondecreasing in a.
  bool is_monotone() const;
};

/// Y(x, a_k) = a_k - u0(x). Throws RangeError if u0 leaves [0, 1].
template <int Dim>
LevelField<Dim> lift(const CellAverages<Dim>& u0, int n_a);

/// Shifts every a-slice by dt * F'(a) along each axis with periodic wrap and
/// linear interpolation. Integer cell shifts are reproduced exactly.
template <int Dim>
LevelField<Dim> transport_step(const LevelField<Dim>& y, double dt, const FluxArg<Dim>& flux);

/// Grid-aligned transport from time t0 to t1: slice k moves by
/// round(t1 F'(a_k) / h) - round(t0 F'(a_k) / h) whole cells, so that its
/// accumulated displacement tracks t F'(a_k) to within half a cell.
template <int Dim>
LevelField<Dim> transport_step_aligned(const LevelField<Dim>& y, double t0, double t1,
                                       const FluxArg<Dim>& flux);

/// Per-column L2 projection onto nondecreasing sequences (uniform a-grid
/// weights) by pool-adjacent-violators.
template <int Dim>
LevelField<Dim> monotone_project(const LevelField<Dim>& y);

/// u(x) = (1/n_a) #{k : Y(x, a_k) < 0}. Throws NotMonotone.
template <int Dim>
CellAverages<Dim> reconstruct(const LevelField<Dim>& y);

enum class TransportMode {
  /// whole-cell shifts tracking the exact slice displacement (default)
  GridAligned,
  /// linear interpolation of the exact shift at every step
  Interpolate,
};

template <int Dim>
struct EvolveOptions {
  TransportMode mode = TransportMode::GridAligned;
  /// Called after every transport + projection step with the step index
  /// (1-based), the time and the projected level field.
  std::function<void(int, double, const LevelField<Dim>&)> observer;
};

/// Transport-then-project splitting for ceil(T / dt) equal steps of length
/// T / ceil(T / dt), starting from lift(u0), followed by reconstruct.
template <int Dim>
CellAverages<Dim> evolve(const CellAverages<Dim>& u0, const FluxArg<Dim>& flux, double T,
                         double dt, int n_a, const EvolveOptions<Dim>& opt = {});

/// Number of steps evolve() takes.
int step_count(double T, double dt);

}  // namespace cpde
