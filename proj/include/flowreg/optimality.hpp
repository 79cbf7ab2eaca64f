#pragma once

#include <utility>
#include <vector>

#include "flowreg/chebyshev.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/time_grid.hpp"
#include "flowreg/transport.hpp"

namespace flowreg {

/// Objective value split into its two building blocks, j = l2_half + s.
struct ObjectiveReport {
  double j = 0.0;
  double l2_half = 0.0;  ///< 0.5 * || m_R - m_1 ||^2_{L2}
  double s = 0.0;        ///< regularization energy int S[v] dt
};

/// Frozen per-iterate quantities shared by the gradient and all Hessian
/// matrix-vector products: the sampled velocity, the state and adjoint
/// trajectories, and Grad(m) at every time node. Read-only once built; safe
/// to share across concurrent matvecs.
struct IterateState {
  VelocityCoefficients vc;
  SampledVelocity sv;
  Trajectory m;
  Trajectory lambda;
  std::vector<VectorField> grad_m;

  const ScalarField& m1() const { return m.final(); }
};

/// Forward + adjoint solve pair at an iterate (one "gradient evaluation").
inline IterateState build_state(const VelocityCoefficients& vc, const ScalarField& m_T,
                                const ScalarField& m_R, const TimeGrid& tg) {
  SampledVelocity sv(vc, tg);
  Trajectory m = solve_state(m_T, sv, tg);
  ScalarField lambda1 = m_R;
  lambda1 -= m.final();
  Trajectory lambda = solve_adjoint(lambda1, sv, tg);
  std::vector<VectorField> gm = gradient_frames(m);
  return IterateState{vc, std::move(sv), std::move(m), std::move(lambda), std::move(gm)};
}

/// As build_state but reusing a state trajectory already computed for this
/// velocity (the accepted line-search trial).
inline IterateState build_state(const VelocityCoefficients& vc, Trajectory m,
                                const ScalarField& m_R, const TimeGrid& tg) {
  SampledVelocity sv(vc, tg);
  ScalarField lambda1 = m_R;
  lambda1 -= m.final();
  Trajectory lambda = solve_adjoint(lambda1, sv, tg);
  std::vector<VectorField> gm = gradient_frames(m);
  return IterateState{vc, std::move(sv), std::move(m), std::move(lambda), std::move(gm)};
}

/// Regularization energy (beta/2) sum_l <A v_l, v_l> (identity Gram matrix).
inline double reg_energy(const VelocityCoefficients& vc, const RegConfig& reg) {
  double s = 0.0;
  for (const VectorField& vl : vc.coeffs) s += dot_l2(apply_reg_operator(vl, reg), vl);
  return 0.5 * reg.beta * s;
}

inline double half_l2_mismatch(const ScalarField& m1, const ScalarField& m_R) {
  ScalarField r = m_R;
  r -= m1;
  return 0.5 * dot_l2(r, r);
}

/// Objective at a velocity: runs the forward solve and reports J together
/// with the state trajectory (reused by callers for the adjoint solve).
inline std::pair<ObjectiveReport, Trajectory> evaluate_objective(const VelocityCoefficients& vc,
                                                                 const ScalarField& m_T,
                                                                 const ScalarField& m_R,
                                                                 const TimeGrid& tg,
                                                                 const RegConfig& reg) {
  Trajectory m = solve_state(m_T, vc, tg);
  ObjectiveReport rep;
  rep.l2_half = half_l2_mismatch(m.final(), m_R);
  rep.s = reg_energy(vc, reg);
  rep.j = rep.l2_half + rep.s;
  return {rep, std::move(m)};
}

inline ObjectiveReport objective_from_state(const IterateState& st, const ScalarField& m_R,
                                            const RegConfig& reg) {
  ObjectiveReport rep;
  rep.l2_half = half_l2_mismatch(st.m1(), m_R);
  rep.s = reg_energy(st.vc, reg);
  rep.j = rep.l2_half + rep.s;
  return rep;
}

namespace detail {

/// Trapezoid accumulation of int b_l(t) f(t) dt where f(t_j) is produced on
/// demand by `force_at(j)`; the projection K (or identity for gamma = 0) is
/// applied after the time integral, which commutes with it.
template <typename ForceAt>
CoeffFields project_force(ForceAt&& force_at, const ChebBasis& basis, const TimeGrid& tg,
                          const Grid2& grid, const RegConfig& reg) {
  CoeffFields out(static_cast<std::size_t>(basis.n_c), VectorField(grid));
  for (int j = 0; j <= tg.n_t; ++j) {
    const double w = (j == 0 || j == tg.n_t) ? 0.5 * tg.h_t : tg.h_t;
    const std::vector<double> b = basis.eval(tg.node(j));
    const VectorField f = force_at(j);
    for (int l = 0; l < basis.n_c; ++l) axpy(w * b[l], f, out[l]);
  }
  if (reg.gamma == 1)
    for (VectorField& fl : out) fl = leray_project(fl);
  return out;
}

}  // namespace detail

/// Reduced gradient g_l = beta A[v_l] + int b_l K[f] dt with the body force
/// f = lambda Grad(m) (K is the identity when gamma = 0).
inline CoeffFields reduced_gradient(const IterateState& st, const TimeGrid& tg,
                                    const RegConfig& reg) {
  CoeffFields g = detail::project_force(
      [&](int j) { return scale_pointwise(st.lambda.frames[j], st.grad_m[j]); }, st.vc.basis,
      tg, st.vc.grid(), reg);
  for (int l = 0; l < st.vc.n_c(); ++l)
    axpy(reg.beta, apply_reg_operator(st.vc.coeffs[l], reg), g[l]);
  return g;
}

/// Reduced Hessian applied to a coefficient stack: incremental forward and
/// adjoint solves followed by the projected incremental force
/// ft = lt Grad(m) + lam Grad(mt); with gn = true all terms in lambda are
/// dropped (Gauss-Newton), which also skips the Grad(mt) frames.
inline CoeffFields hessian_matvec(const CoeffFields& vtilde, const IterateState& st,
                                  const TimeGrid& tg, const RegConfig& reg, bool gn) {
  const VelocityCoefficients vt{st.vc.basis, vtilde};
  const SampledVelocity sv_tilde(vt, tg);
  const Trajectory mt = solve_incremental_state(st.sv, sv_tilde, st.grad_m, tg);
  ScalarField terminal = mt.final();
  terminal *= -1.0;
  const Trajectory lt =
      solve_incremental_adjoint(st.sv, sv_tilde, gn ? nullptr : &st.lambda, terminal, tg, gn);

  CoeffFields out = detail::project_force(
      [&](int j) {
        VectorField f = scale_pointwise(lt.frames[j], st.grad_m[j]);
        if (!gn) f += scale_pointwise(st.lambda.frames[j], spectral_grad(mt.frames[j]));
        return f;
      },
      st.vc.basis, tg, st.vc.grid(), reg);
  for (int l = 0; l < st.vc.n_c(); ++l)
    axpy(reg.beta, apply_reg_operator(vtilde[l], reg), out[l]);
  return out;
}

/// Pressure reconstruction p = -Lap^{-1}(Div f) (mean-zero gauge); available
/// for diagnostics, the optimality system itself never stores p.
inline ScalarField reconstruct_pressure(const VectorField& force) {
  ScalarField p = spectral_inv_laplacian(spectral_div(force));
  p *= -1.0;
  return p;
}

}  // namespace flowreg
