#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "flowreg/errors.hpp"

namespace flowreg {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Regular periodic nodal grid on (-pi,pi)^2. No boundary nodes are
/// duplicated; node (i,j) sits at x = -pi + i*h[0], y = -pi + j*h[1].
struct Grid2 {
  std::array<int, 2> n{0, 0};
  std::array<double, 2> h{0.0, 0.0};

  Grid2() = default;
  Grid2(int n1, int n2) : n{n1, n2}, h{kTwoPi / n1, kTwoPi / n2} {
    if (n1 < 4 || n2 < 4 || n1 % 2 != 0 || n2 % 2 != 0)
      throw OutOfRange("Grid2: axes must be even and >= 4");
  }

  int size() const { return n[0] * n[1]; }
  double cell_volume() const { return h[0] * h[1]; }
  double coord(int axis, int i) const { return -std::numbers::pi + h[axis] * i; }

  friend bool operator==(const Grid2& a, const Grid2& b) { return a.n == b.n; }
  friend bool operator!=(const Grid2& a, const Grid2& b) { return !(a == b); }
};

/// Scalar samples on a Grid2, row-major: value(i,j) = v[i*n2 + j].
struct ScalarField {
  Grid2 grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid2& g, double fill = 0.0)
      : grid(g), v(static_cast<std::size_t>(g.size()), fill) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * grid.n[1] + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * grid.n[1] + j]; }

  template <typename F>
  static ScalarField sample(const Grid2& g, F&& f) {
    ScalarField s(g);
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j) s(i, j) = f(g.coord(0, i), g.coord(1, j));
    return s;
  }

  ScalarField& operator+=(const ScalarField& o) {
    assert(grid == o.grid);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    assert(grid == o.grid);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& x : v) x *= a;
    return *this;
  }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double a, ScalarField s) { return s *= a; }

/// y += a*x
inline void axpy(double a, const ScalarField& x, ScalarField& y) {
  assert(x.grid == y.grid);
  for (std::size_t i = 0; i < x.v.size(); ++i) y.v[i] += a * x.v[i];
}

/// Volume-weighted discrete L2 inner product, <a,b> = h1*h2 * sum a_i b_i.
inline double dot_l2(const ScalarField& a, const ScalarField& b) {
  assert(a.grid == b.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s * a.grid.cell_volume();
}

inline double norm_l2(const ScalarField& a) { return std::sqrt(dot_l2(a, a)); }

inline double norm_inf(const ScalarField& a) {
  double m = 0.0;
  for (double x : a.v) m = std::max(m, std::abs(x));
  return m;
}

inline double mean(const ScalarField& a) {
  double s = 0.0;
  for (double x : a.v) s += x;
  return s / static_cast<double>(a.v.size());
}

/// Quadrature of the field over the domain (cell-volume weights).
inline double integral(const ScalarField& a) {
  double s = 0.0;
  for (double x : a.v) s += x;
  return s * a.grid.cell_volume();
}

inline bool all_finite(const ScalarField& a) {
  for (double x : a.v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Two-component vector field; both components share one grid.
struct VectorField {
  Grid2 grid;
  std::array<ScalarField, 2> comp;

  VectorField() = default;
  explicit VectorField(const Grid2& g) : grid(g), comp{ScalarField(g), ScalarField(g)} {}
  VectorField(ScalarField c1, ScalarField c2) : grid(c1.grid), comp{std::move(c1), std::move(c2)} {
    assert(comp[0].grid == comp[1].grid);
  }

  ScalarField& operator[](int c) { return comp[c]; }
  const ScalarField& operator[](int c) const { return comp[c]; }

  template <typename F1, typename F2>
  static VectorField sample(const Grid2& g, F1&& f1, F2&& f2) {
    return VectorField(ScalarField::sample(g, std::forward<F1>(f1)),
                       ScalarField::sample(g, std::forward<F2>(f2)));
  }

  VectorField& operator+=(const VectorField& o) {
    comp[0] += o.comp[0];
    comp[1] += o.comp[1];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    comp[0] -= o.comp[0];
    comp[1] -= o.comp[1];
    return *this;
  }
  VectorField& operator*=(double a) {
    comp[0] *= a;
    comp[1] *= a;
    return *this;
  }

  /// Per-axis maximum magnitude, (max|v^1|, max|v^2|).
  std::array<double, 2> max_abs_per_axis() const {
    return {norm_inf(comp[0]), norm_inf(comp[1])};
  }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double a, VectorField w) { return w *= a; }

inline void axpy(double a, const VectorField& x, VectorField& y) {
  axpy(a, x.comp[0], y.comp[0]);
  axpy(a, x.comp[1], y.comp[1]);
}

inline double dot_l2(const VectorField& a, const VectorField& b) {
  return dot_l2(a.comp[0], b.comp[0]) + dot_l2(a.comp[1], b.comp[1]);
}

inline double norm_l2(const VectorField& a) { return std::sqrt(dot_l2(a, a)); }

inline double norm_inf(const VectorField& a) {
  return std::max(norm_inf(a.comp[0]), norm_inf(a.comp[1]));
}

inline bool all_finite(const VectorField& a) {
  return all_finite(a.comp[0]) && all_finite(a.comp[1]);
}

/// Pointwise product s*w of a scalar and a vector field.
inline VectorField scale_pointwise(const ScalarField& s, const VectorField& w) {
  assert(s.grid == w.grid);
  VectorField r(w.grid);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < s.v.size(); ++i) r.comp[c].v[i] = s.v[i] * w.comp[c].v[i];
  return r;
}

/// Pointwise dot product of two vector fields, (a.b)(x).
inline ScalarField dot_pointwise(const VectorField& a, const VectorField& b) {
  assert(a.grid == b.grid);
  ScalarField r(a.grid);
  for (std::size_t i = 0; i < r.v.size(); ++i)
    r.v[i] = a.comp[0].v[i] * b.comp[0].v[i] + a.comp[1].v[i] * b.comp[1].v[i];
  return r;
}

}  // namespace flowreg
