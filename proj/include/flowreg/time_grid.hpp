#pragma once

#include <array>
#include <limits>
#include <vector>

#include "flowreg/errors.hpp"
#include "flowreg/field.hpp"

namespace flowreg {

/// Uniform grid on the unit time horizon: n_t steps of size h_t = 1/n_t.
struct TimeGrid {
  int n_t = 0;
  double h_t = 0.0;
  double cfl_number = 0.2;

  TimeGrid() = default;
  explicit TimeGrid(int nt, double cfl = 0.2) : n_t(nt), h_t(1.0 / nt), cfl_number(cfl) {
    if (nt < 1) throw OutOfRange("TimeGrid: n_t must be positive");
    if (cfl <= 0.0 || cfl > 1.0) throw OutOfRange("TimeGrid: cfl_number must be in (0,1]");
  }

  double node(int j) const { return h_t * j; }
};

/// Largest stable time step eps_cfl / max_i(|v|_inf^i / h_x^i). Returns
/// +infinity for a vanishing velocity (no stability limit).
inline double cfl_max_dt(const std::array<double, 2>& v_max_per_axis, const Grid2& grid,
                         double cfl) {
  if (cfl <= 0.0) throw OutOfRange("cfl_max_dt: cfl must be positive");
  const double rate =
      std::max(v_max_per_axis[0] / grid.h[0], v_max_per_axis[1] / grid.h[1]);
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return cfl / rate;
}

/// Time-indexed storage of a transported scalar field at all n_t+1 nodes.
struct Trajectory {
  TimeGrid time_grid;
  std::vector<ScalarField> frames;

  Trajectory() = default;
  Trajectory(const TimeGrid& tg, const Grid2& g)
      : time_grid(tg), frames(static_cast<std::size_t>(tg.n_t) + 1, ScalarField(g)) {}

  const ScalarField& initial() const { return frames.front(); }
  const ScalarField& final() const { return frames.back(); }
};

/// End-time deformation gradient tensor field (entries of F_1).
struct TensorTrajectoryFinal {
  Grid2 grid;
  ScalarField f11, f12, f21, f22;

  /// Pointwise determinant f11*f22 - f12*f21.
  ScalarField det() const {
    ScalarField d(grid);
    for (std::size_t i = 0; i < d.v.size(); ++i)
      d.v[i] = f11.v[i] * f22.v[i] - f12.v[i] * f21.v[i];
    return d;
  }
};

}  // namespace flowreg
