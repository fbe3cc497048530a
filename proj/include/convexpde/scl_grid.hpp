#pragma once

#include <array>
#include <cmath>
#include <type_traits>

#include <Eigen/Dense>

#include "convexpde/errors.hpp"
#include "convexpde/flux_law.hpp"

namespace cpde {

/// Uniform periodic grid on the unit torus T^Dim with n cells per axis.
/// Cells are numbered with the first axis fastest.
template <int Dim>
struct PeriodicGrid {
  static_assert(Dim == 1 || Dim == 2, "only 1D and 2D grids are supported");
  int n = 0;

  double h() const { return 1.0 / n; }
  Eigen::Index cells() const {
    Eigen::Index c = 1;
    for (int k = 0; k < Dim; ++k) c *= n;
    return c;
  }
  double cell_volume() const { return std::pow(h(), Dim); }
  /// Center coordinate of cell `c` along `axis`.
  double center(Eigen::Index c, int axis) const {
    Eigen::Index idx = axis == 0 ? c % n : c / n;
    return (static_cast<double>(idx) + 0.5) * h();
  }
  bool operator==(const PeriodicGrid&) const = default;
};

/// Cell averages u valued in [0, 1].
template <int Dim>
struct CellAverages {
  PeriodicGrid<Dim> grid;
  Eigen::VectorXd u;

  double mass() const { return u.sum() * grid.cell_volume(); }
};

/// One flux per spatial axis.
template <int Dim>
using FluxVector = std::array<FluxLaw, Dim>;

/// FluxVector in parameter position; Dim is deduced from the other
/// arguments, so braced lists such as {FluxLaw::burgers()} work.
template <int Dim>
using FluxArg = std::type_identity_t<FluxVector<Dim>>;

/// Cell averages of f sampled at cell centers (1D: f(x); 2D: f(x, y) via
/// the two coordinates).
template <typename Fn>
CellAverages<1> sample_cells_1d(int n, Fn&& f) {
  CellAverages<1> c{{n}, Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) c.u(i) = f(c.grid.center(i, 0));
  return c;
}

template <typename Fn>
CellAverages<2> sample_cells_2d(int n, Fn&& f) {
  CellAverages<2> c{{n}, Eigen::VectorXd(static_cast<Eigen::Index>(n) * n)};
  for (Eigen::Index i = 0; i < c.u.size(); ++i) c.u(i) = f(c.grid.center(i, 0), c.grid.center(i, 1));
  return c;
}

}  // namespace cpde
