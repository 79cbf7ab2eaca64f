#pragma once

#include <array>
#include <string>
#include <vector>

#include "flowreg/chebyshev.hpp"
#include "flowreg/errors.hpp"
#include "flowreg/field.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/time_grid.hpp"

namespace flowreg {

namespace detail {

inline void check_cfl_step(const SampledVelocity& sv, int j) {
  const TimeGrid& tg = sv.time_grid();
  const Grid2& g = sv.grid();
  const auto& a = sv.max_abs_at(j);
  const auto& b = sv.max_abs_at(j + 1);
  const double rate = std::max(std::max(a[0], b[0]) / g.h[0], std::max(a[1], b[1]) / g.h[1]);
  if (tg.h_t * rate > tg.cfl_number)
    throw CflViolation("transport: CFL bound exceeded at step " + std::to_string(j) +
                       " (h_t * max|v|/h_x = " + std::to_string(tg.h_t * rate) + ")");
}

/// Advective right-hand side -Grad(m).v of the state equation.
inline ScalarField advective_rhs(const ScalarField& m, const VectorField& v) {
  ScalarField r = dot_pointwise(spectral_grad(m), v);
  r *= -1.0;
  return r;
}

/// Conservative right-hand side Div(v*lam); drives the reversed-time form of
/// the adjoint equation.
inline ScalarField conservative_rhs(const ScalarField& lam, const VectorField& v) {
  return spectral_div(scale_pointwise(lam, v));
}

}  // namespace detail

/// Gradients of every frame of a trajectory (used as the source term of the
/// incremental state equation and in the body-force assembly).
inline std::vector<VectorField> gradient_frames(const Trajectory& traj) {
  std::vector<VectorField> g;
  g.reserve(traj.frames.size());
  for (const ScalarField& f : traj.frames) g.push_back(spectral_grad(f));
  return g;
}

/// State equation d_t m + Grad(m).v = 0, m(.,0) = m0, integrated by explicit
/// RK2 (Heun); both stages fall on stored time nodes.
inline Trajectory solve_state(const ScalarField& m0, const SampledVelocity& sv,
                              const TimeGrid& tg) {
  Trajectory traj(tg, m0.grid);
  traj.frames[0] = m0;
  for (int j = 0; j < tg.n_t; ++j) {
    detail::check_cfl_step(sv, j);
    const ScalarField& m = traj.frames[j];
    const ScalarField k1 = detail::advective_rhs(m, sv.at_node(j));
    ScalarField mid = m;
    axpy(tg.h_t, k1, mid);
    const ScalarField k2 = detail::advective_rhs(mid, sv.at_node(j + 1));
    ScalarField& next = traj.frames[j + 1];
    next = m;
    axpy(0.5 * tg.h_t, k1, next);
    axpy(0.5 * tg.h_t, k2, next);
  }
  return traj;
}

inline Trajectory solve_state(const ScalarField& m0, const VelocityCoefficients& vc,
                              const TimeGrid& tg) {
  return solve_state(m0, SampledVelocity(vc, tg), tg);
}

/// Adjoint equation -d_t lam - Div(v lam) = 0, lam(.,1) = lambda1, integrated
/// backward as forward RK2 in the reversed time variable.
inline Trajectory solve_adjoint(const ScalarField& lambda1, const SampledVelocity& sv,
                                const TimeGrid& tg) {
  Trajectory traj(tg, lambda1.grid);
  traj.frames[tg.n_t] = lambda1;
  for (int j = tg.n_t - 1; j >= 0; --j) {
    detail::check_cfl_step(sv, j);
    const ScalarField& lam = traj.frames[j + 1];
    const ScalarField k1 = detail::conservative_rhs(lam, sv.at_node(j + 1));
    ScalarField mid = lam;
    axpy(tg.h_t, k1, mid);
    const ScalarField k2 = detail::conservative_rhs(mid, sv.at_node(j));
    ScalarField& prev = traj.frames[j];
    prev = lam;
    axpy(0.5 * tg.h_t, k1, prev);
    axpy(0.5 * tg.h_t, k2, prev);
  }
  return traj;
}

inline Trajectory solve_adjoint(const ScalarField& lambda1, const VelocityCoefficients& vc,
                                const TimeGrid& tg) {
  return solve_adjoint(lambda1, SampledVelocity(vc, tg), tg);
}

/// Incremental state equation d_t mt + Grad(mt).v + Grad(m).vt = 0 with
/// mt(.,0) = 0; grad_m holds Grad(m) at every time node.
inline Trajectory solve_incremental_state(const SampledVelocity& sv,
                                          const SampledVelocity& sv_tilde,
                                          const std::vector<VectorField>& grad_m,
                                          const TimeGrid& tg) {
  if (static_cast<int>(grad_m.size()) != tg.n_t + 1)
    throw LengthMismatch("solve_incremental_state: grad_m.size() != n_t + 1");
  Trajectory traj(tg, sv.grid());
  auto rhs = [&](const ScalarField& mt, int node) {
    ScalarField r = detail::advective_rhs(mt, sv.at_node(node));
    const ScalarField src = dot_pointwise(grad_m[node], sv_tilde.at_node(node));
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= src.v[i];
    return r;
  };
  for (int j = 0; j < tg.n_t; ++j) {
    detail::check_cfl_step(sv, j);
    const ScalarField& mt = traj.frames[j];
    const ScalarField k1 = rhs(mt, j);
    ScalarField mid = mt;
    axpy(tg.h_t, k1, mid);
    const ScalarField k2 = rhs(mid, j + 1);
    ScalarField& next = traj.frames[j + 1];
    next = mt;
    axpy(0.5 * tg.h_t, k1, next);
    axpy(0.5 * tg.h_t, k2, next);
  }
  return traj;
}

inline Trajectory solve_incremental_state(const SampledVelocity& sv,
                                          const SampledVelocity& sv_tilde,
                                          const Trajectory& m_traj, const TimeGrid& tg) {
  return solve_incremental_state(sv, sv_tilde, gradient_frames(m_traj), tg);
}

/// Incremental adjoint equation -d_t lt - Div(v lt) - Div(vt lam) = 0 with
/// lt(.,1) = terminal, integrated backward. With gn = true the Div(vt lam)
/// source is dropped (Gauss-Newton) and lambda_traj may be null.
inline Trajectory solve_incremental_adjoint(const SampledVelocity& sv,
                                            const SampledVelocity& sv_tilde,
                                            const Trajectory* lambda_traj,
                                            const ScalarField& terminal, const TimeGrid& tg,
                                            bool gn) {
  if (!gn && lambda_traj == nullptr)
    throw LengthMismatch("solve_incremental_adjoint: full Newton needs the adjoint trajectory");
  Trajectory traj(tg, terminal.grid);
  traj.frames[tg.n_t] = terminal;
  auto rhs = [&](const ScalarField& lt, int node) {
    ScalarField r = detail::conservative_rhs(lt, sv.at_node(node));
    if (!gn) {
      const ScalarField src =
          detail::conservative_rhs(lambda_traj->frames[node], sv_tilde.at_node(node));
      for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += src.v[i];
    }
    return r;
  };
  for (int j = tg.n_t - 1; j >= 0; --j) {
    detail::check_cfl_step(sv, j);
    const ScalarField& lt = traj.frames[j + 1];
    const ScalarField k1 = rhs(lt, j + 1);
    ScalarField mid = lt;
    axpy(tg.h_t, k1, mid);
    const ScalarField k2 = rhs(mid, j);
    ScalarField& prev = traj.frames[j];
    prev = lt;
    axpy(0.5 * tg.h_t, k1, prev);
    axpy(0.5 * tg.h_t, k2, prev);
  }
  return traj;
}

/// Displacement transport d_t u + (Grad u) v = v, u(.,0) = 0; returns u_1.
/// The deformation map is y = x - u_1.
inline VectorField solve_displacement(const SampledVelocity& sv, const TimeGrid& tg) {
  VectorField u(sv.grid());
  auto rhs = [&](const VectorField& uu, int node) {
    const VectorField& v = sv.at_node(node);
    VectorField r(uu.grid);
    for (int c = 0; c < 2; ++c) {
      const VectorField gu = spectral_grad(uu.comp[c]);
      const ScalarField adv = dot_pointwise(gu, v);
      for (std::size_t i = 0; i < r.comp[c].v.size(); ++i)
        r.comp[c].v[i] = v.comp[c].v[i] - adv.v[i];
    }
    return r;
  };
  for (int j = 0; j < tg.n_t; ++j) {
    detail::check_cfl_step(sv, j);
    const VectorField k1 = rhs(u, j);
    VectorField mid = u;
    axpy(tg.h_t, k1, mid);
    const VectorField k2 = rhs(mid, j + 1);
    axpy(0.5 * tg.h_t, k1, u);
    axpy(0.5 * tg.h_t, k2, u);
  }
  return u;
}

inline VectorField solve_displacement(const VelocityCoefficients& vc, const TimeGrid& tg) {
  return solve_displacement(SampledVelocity(vc, tg), tg);
}

/// Deformation-gradient transport d_t F + (v.Grad) F = (Grad v) F with
/// F(.,0) = I; returns F_1. det(F_1) = 1 signals local volume preservation.
inline TensorTrajectoryFinal solve_defgrad(const SampledVelocity& sv, const TimeGrid& tg) {
  const Grid2& g = sv.grid();
  using Tensor = std::array<ScalarField, 4>;  // row-major 2x2: [F11 F12; F21 F22]
  Tensor F{ScalarField(g, 1.0), ScalarField(g, 0.0), ScalarField(g, 0.0), ScalarField(g, 1.0)};

  // Grad v at a node: gv[i] = (d1 v^i, d2 v^i). Cached for stationary fields.
  auto grad_v_at = [&](int node) {
    return std::array<VectorField, 2>{spectral_grad(sv.at_node(node).comp[0]),
                                      spectral_grad(sv.at_node(node).comp[1])};
  };
  const bool stationary = sv.stationary();
  const std::array<VectorField, 2> gv0 = grad_v_at(0);

  auto rhs = [&](const Tensor& Fc, int node) {
    const VectorField& v = sv.at_node(node);
    const std::array<VectorField, 2> gv = stationary ? gv0 : grad_v_at(node);
    Tensor r{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    for (int i = 0; i < 2; ++i)
      for (int jj = 0; jj < 2; ++jj) {
        ScalarField& out = r[2 * i + jj];
        // (Grad v) F: sum_a d_a v^i F_{a jj}
        for (std::size_t p = 0; p < out.v.size(); ++p)
          out.v[p] = gv[i].comp[0].v[p] * Fc[jj].v[p] + gv[i].comp[1].v[p] * Fc[2 + jj].v[p];
        // - (v.Grad) F_{i jj}
        const ScalarField adv = dot_pointwise(spectral_grad(Fc[2 * i + jj]), v);
        for (std::size_t p = 0; p < out.v.size(); ++p) out.v[p] -= adv.v[p];
      }
    return r;
  };

  for (int j = 0; j < tg.n_t; ++j) {
    detail::check_cfl_step(sv, j);
    const Tensor k1 = rhs(F, j);
    Tensor mid = F;
    for (int e = 0; e < 4; ++e) axpy(tg.h_t, k1[e], mid[e]);
    const Tensor k2 = rhs(mid, j + 1);
    for (int e = 0; e < 4; ++e) {
      axpy(0.5 * tg.h_t, k1[e], F[e]);
      axpy(0.5 * tg.h_t, k2[e], F[e]);
    }
  }
  return TensorTrajectoryFinal{g, std::move(F[0]), std::move(F[1]), std::move(F[2]),
                               std::move(F[3])};
}

inline TensorTrajectoryFinal solve_defgrad(const VelocityCoefficients& vc, const TimeGrid& tg) {
  return solve_defgrad(SampledVelocity(vc, tg), tg);
}

}  // namespace flowreg
