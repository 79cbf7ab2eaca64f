#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "flowreg/errors.hpp"
#include "flowreg/field.hpp"
#include "flowreg/time_grid.hpp"

namespace flowreg {

namespace detail {

/// Gauss-Legendre nodes/weights on [0,1] (Newton refinement of Chebyshev
/// initial guesses). Exact for polynomials of degree <= 2n-1.
inline void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = 0.5 * (1.0 + x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace detail

/// Temporal basis of n_c functions spanning polynomials of degree < n_c on
/// [0,1]. The raw Chebyshev polynomials are orthonormalized under the
/// unweighted L2([0,1]) inner product (Gram-Schmidt, equivalent to shifted
/// Legendre functions), so the Gram matrix c_{ll'} = int b_l b_l' dt is the
/// identity and the coefficient coupling in the control equations collapses
/// to a diagonal. b_1 is the constant function 1 (stationary case).
struct ChebBasis {
  int n_c = 1;
  std::vector<double> nodes;  ///< Chebyshev-Gauss-Lobatto abscissae mapped to [0,1]
  std::vector<double> gram;   ///< n_c x n_c, row-major

  explicit ChebBasis(int nc = 1) : n_c(nc) {
    if (nc < 1) throw OutOfRange("ChebBasis: n_c must be positive");
    nodes.resize(nc);
    if (nc == 1) {
      nodes[0] = 0.5;
    } else {
      for (int j = 0; j < nc; ++j)
        nodes[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * j / (nc - 1)));
    }
    compute_gram();
  }

  /// Evaluate (b_1(t),...,b_{n_c}(t)); t must lie in [0,1].
  std::vector<double> eval(double t) const {
    if (t < 0.0 || t > 1.0) throw OutOfRange("ChebBasis: t outside [0,1]");
    std::vector<double> b(n_c);
    const double s = 2.0 * t - 1.0;
    double p0 = 1.0, p1 = s;
    for (int l = 0; l < n_c; ++l) {
      double p;
      if (l == 0)
        p = 1.0;
      else if (l == 1)
        p = s;
      else {
        p = ((2.0 * l - 1.0) * s * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p;
      }
      b[l] = std::sqrt(2.0 * l + 1.0) * p;
    }
    return b;
  }

 private:
  void compute_gram() {
    gram.assign(static_cast<std::size_t>(n_c) * n_c, 0.0);
    std::vector<double> qn, qw;
    detail::gauss_legendre_01(std::max(2 * n_c, 4), qn, qw);
    for (std::size_t q = 0; q < qn.size(); ++q) {
      const std::vector<double> b = eval(qn[q]);
      for (int l = 0; l < n_c; ++l)
        for (int m = 0; m < n_c; ++m) gram[static_cast<std::size_t>(l) * n_c + m] += qw[q] * b[l] * b[m];
    }
  }
};

inline std::vector<double> eval_basis(const ChebBasis& basis, double t) { return basis.eval(t); }

/// Stack of per-coefficient vector fields; the layout shared by the velocity
/// unknowns, gradients and search directions.
using CoeffFields = std::vector<VectorField>;

inline void axpy(double a, const CoeffFields& x, CoeffFields& y) {
  for (std::size_t l = 0; l < x.size(); ++l) axpy(a, x[l], y[l]);
}

inline double dot_l2(const CoeffFields& a, const CoeffFields& b) {
  double s = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) s += dot_l2(a[l], b[l]);
  return s;
}

inline double norm_l2(const CoeffFields& a) { return std::sqrt(dot_l2(a, a)); }

inline double norm_inf(const CoeffFields& a) {
  double m = 0.0;
  for (const VectorField& w : a) m = std::max(m, norm_inf(w));
  return m;
}

inline CoeffFields operator*(double a, CoeffFields c) {
  for (VectorField& w : c) w *= a;
  return c;
}

inline CoeffFields operator-(CoeffFields a, const CoeffFields& b) {
  for (std::size_t l = 0; l < a.size(); ++l) a[l] -= b[l];
  return a;
}

inline CoeffFields zero_like(const CoeffFields& a) {
  CoeffFields z;
  z.reserve(a.size());
  for (const VectorField& w : a) z.emplace_back(w.grid);
  return z;
}

/// The optimization unknowns: v(x,t) = sum_l b_l(t) v_l(x).
struct VelocityCoefficients {
  ChebBasis basis;
  CoeffFields coeffs;

  VelocityCoefficients() : basis(1) {}
  VelocityCoefficients(ChebBasis b, CoeffFields c) : basis(std::move(b)), coeffs(std::move(c)) {
    if (static_cast<int>(coeffs.size()) != basis.n_c)
      throw LengthMismatch("VelocityCoefficients: coeffs.size() != n_c");
  }
  /// Zero velocity with n_c coefficient fields on a grid.
  VelocityCoefficients(const Grid2& g, int nc)
      : basis(nc), coeffs(static_cast<std::size_t>(nc), VectorField(g)) {}

  int n_c() const { return basis.n_c; }
  const Grid2& grid() const { return coeffs.front().grid; }
};

/// v(.,t) = sum_l b_l(t) v_l.
inline VectorField expand_velocity(const VelocityCoefficients& vc, double t) {
  const std::vector<double> b = vc.basis.eval(t);
  VectorField out(vc.grid());
  for (int l = 0; l < vc.n_c(); ++l) axpy(b[l], vc.coeffs[l], out);
  return out;
}

/// Trapezoid-rule time integrals int_0^1 b_l(t) frame(t) dt from frames
/// stored at the n_t+1 uniform nodes.
inline CoeffFields project_time_integral(const std::vector<VectorField>& frames,
                                         const ChebBasis& basis, const TimeGrid& tg) {
  if (static_cast<int>(frames.size()) != tg.n_t + 1)
    throw LengthMismatch("project_time_integral: frames.size() != n_t + 1");
  CoeffFields out(static_cast<std::size_t>(basis.n_c), VectorField(frames.front().grid));
  for (int j = 0; j <= tg.n_t; ++j) {
    const double w = (j == 0 || j == tg.n_t) ? 0.5 * tg.h_t : tg.h_t;
    const std::vector<double> b = basis.eval(tg.node(j));
    for (int l = 0; l < basis.n_c; ++l) axpy(w * b[l], frames[j], out[l]);
  }
  return out;
}

/// Velocity expansion evaluated at all time nodes of a grid. For a stationary
/// field (n_c = 1, constant basis) a single field is shared across nodes.
class SampledVelocity {
 public:
  SampledVelocity(const VelocityCoefficients& vc, const TimeGrid& tg)
      : tg_(tg), stationary_(vc.n_c() == 1) {
    const int last = stationary_ ? 0 : tg.n_t;
    fields_.reserve(last + 1);
    max_abs_.reserve(last + 1);
    for (int j = 0; j <= last; ++j) {
      fields_.push_back(expand_velocity(vc, stationary_ ? 0.0 : tg.node(j)));
      max_abs_.push_back(fields_.back().max_abs_per_axis());
    }
  }

  const TimeGrid& time_grid() const { return tg_; }
  const Grid2& grid() const { return fields_.front().grid; }
  bool stationary() const { return stationary_; }

  const VectorField& at_node(int j) const { return fields_[stationary_ ? 0 : j]; }
  const std::array<double, 2>& max_abs_at(int j) const { return max_abs_[stationary_ ? 0 : j]; }

  /// Largest per-axis magnitude over the whole horizon.
  std::array<double, 2> max_abs() const {
    std::array<double, 2> m{0.0, 0.0};
    for (const auto& a : max_abs_) {
      m[0] = std::max(m[0], a[0]);
      m[1] = std::max(m[1], a[1]);
    }
    return m;
  }

 private:
  TimeGrid tg_;
  bool stationary_;
  std::vector<VectorField> fields_;
  std::vector<std::array<double, 2>> max_abs_;
};

/// True when the expanded velocity satisfies the CFL bound on this time grid.
inline bool cfl_ok(const VelocityCoefficients& vc, const TimeGrid& tg) {
  const SampledVelocity sv(vc, tg);
  return tg.h_t <= cfl_max_dt(sv.max_abs(), sv.grid(), tg.cfl_number);
}

}  // namespace flowreg
