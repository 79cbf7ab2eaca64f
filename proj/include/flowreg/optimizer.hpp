#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowreg/chebyshev.hpp"
#include "flowreg/optimality.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/time_grid.hpp"

namespace flowreg {

enum class Method { Picard, NPCG, GNPCG };

/// Which battery of termination criteria ends the outer loop.
///  - Battery: (C1 & C2 & C3) | C4 | C5 with tolerance tau_j
///  - GradRed: relative l-inf gradient reduction, plus the stagnation
///             detector (used by the convergence studies)
///  - Stagnation: stagnation detector only (plus C4/C5 safety stops)
enum class StopMode { Battery, GradRed, Stagnation };

enum class SolveStatus { Converged, Stagnated, MaxIterations };

struct SolverConfig {
  Method method = Method::GNPCG;
  StopMode stop_mode = StopMode::Battery;
  double tau_j = 1e-3;
  long n_opt = 1000000;
  double grad_reduction = 1e-3;  ///< GradRed stop: ||g_k|| <= grad_reduction * ||g_0||
  int stagnation_window = 10;
  double stagnation_tol = 1e-6;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int max_line_search = 50;  ///< halvings before reporting stagnation
  long pcg_max_iters = 0;    ///< 0 means the system order n
  double eps_mach = std::numeric_limits<double>::epsilon();
  bool picard_step_memory = true;
  int max_cfl_rescale = 60;
};

/// One row of the optimization log. n_pde accounting: +2 per gradient
/// evaluation (forward + adjoint), +2 per Hessian matvec (incremental pair),
/// +1 per line-search objective trial.
struct IterationRecord {
  long k = 0;
  double j = 0.0, l2_half = 0.0, s = 0.0;
  double g_inf = 0.0, g_l2 = 0.0;
  double alpha = 0.0;        ///< accepted step size
  double alpha_tilde = 1.0;  ///< Picard step-memory factor in effect
  long inner = 0;            ///< PCG iterations this outer iteration
  long trials = 0;           ///< line-search objective evaluations
  double step_inf = 0.0;     ///< ||v_k - v_{k-1}||_inf
  long n_pde = 0;            ///< cumulative hyperbolic PDE solves
};

struct IterationLog {
  std::vector<IterationRecord> rows;
  long n_pde = 0;

  long outer_iterations() const { return static_cast<long>(rows.size()) - 1; }
  const IterationRecord& last() const { return rows.back(); }
};

using IterationCallback = std::function<void(const IterationRecord&)>;

struct OuterResult {
  VelocityCoefficients v;
  IterationLog log;
  SolveStatus status = SolveStatus::Converged;
  std::string stop_reason;
};

/// Termination test over the logged iterates (Battery implements C1-C5):
///   C1: J_{k-1} - J_k        < tau (1 + J_0)
///   C2: ||v_{k-1} - v_k||inf < sqrt(tau) (1 + ||v_k||inf)
///   C3: ||g_k||inf           < cbrt(tau) (1 + J_0)
///   C4: ||g_k||inf           < 1e3 eps_mach
///   C5: k > n_opt
/// stop rule: (C1 & C2 & C3) | C4 | C5.
inline bool check_convergence(const IterationLog& log, const SolverConfig& cfg,
                              double v_inf_current, std::string* reason = nullptr) {
  if (log.rows.empty()) return false;
  const IterationRecord& cur = log.rows.back();
  const double j0 = log.rows.front().j;
  const double g0_inf = log.rows.front().g_inf;

  auto set_reason = [&](const char* r) {
    if (reason) *reason = r;
    return true;
  };

  if (cur.g_inf < 1e3 * cfg.eps_mach) return set_reason("C4");
  if (cur.k > cfg.n_opt) return set_reason("C5");

  const bool stagnated = [&] {
    const long w = cfg.stagnation_window;
    if (cur.k < w) return false;
    const IterationRecord& past = log.rows[log.rows.size() - 1 - w];
    return past.j - cur.j <= cfg.stagnation_tol;
  }();

  switch (cfg.stop_mode) {
    case StopMode::Battery: {
      if (cur.k < 1) return false;
      const IterationRecord& prev = log.rows[log.rows.size() - 2];
      const bool c1 = prev.j - cur.j < cfg.tau_j * (1.0 + j0);
      const bool c2 = cur.step_inf < std::sqrt(cfg.tau_j) * (1.0 + v_inf_current);
      const bool c3 = cur.g_inf < std::cbrt(cfg.tau_j) * (1.0 + j0);
      if (c1 && c2 && c3) return set_reason("C1&C2&C3");
      return false;
    }
    case StopMode::GradRed:
      if (cur.g_inf <= cfg.grad_reduction * g0_inf) return set_reason("gradient_reduction");
      if (stagnated) return set_reason("stagnation");
      return false;
    case StopMode::Stagnation:
      if (stagnated) return set_reason("stagnation");
      return false;
  }
  return false;
}

struct PcgResult {
  CoeffFields step;
  long iters = 0;  ///< Hessian applications performed (the inner-iteration count)
  bool neg_curvature = false;
};

/// Preconditioned conjugate gradients on H s = -g with the spectral left
/// preconditioner (beta A)^{-1}. Terminates at relative residual eta or at
/// the iteration cap; a detected direction of nonpositive curvature (full
/// Newton only, by construction impossible for Gauss-Newton) ends the solve
/// with the current iterate, falling back to the preconditioned gradient
/// direction when no progress was made yet.
inline PcgResult pcg_solve(const IterateState& st, const CoeffFields& g, const TimeGrid& tg,
                           const RegConfig& reg, const SolverConfig& cfg, bool gn,
                           double eta, long* matvecs = nullptr) {
  const double g_norm = norm_l2(g);
  if (g_norm == 0.0) throw ZeroGradient("pcg_solve: zero right-hand side");

  auto precond = [&](const CoeffFields& r) {
    CoeffFields z = zero_like(r);
    for (std::size_t l = 0; l < r.size(); ++l) z[l] = invert_reg_operator(r[l], reg);
    return z;
  };

  const long n = 2l * st.vc.grid().size() * st.vc.n_c();
  const long max_it = cfg.pcg_max_iters > 0 ? cfg.pcg_max_iters : n;

  PcgResult res;
  res.step = zero_like(g);
  CoeffFields r = -1.0 * g;
  CoeffFields z = precond(r);
  const CoeffFields z0 = z;  // preconditioned gradient direction
  CoeffFields p = z;
  double rz = dot_l2(r, z);
  bool progressed = false;

  for (long it = 1; it <= max_it; ++it) {
    const CoeffFields hp = hessian_matvec(p, st, tg, reg, gn);
    ++res.iters;
    if (matvecs) ++(*matvecs);
    const double php = dot_l2(p, hp);
    if (php <= 0.0) {
      res.neg_curvature = true;
      if (!progressed) res.step = z0;
      return res;
    }
    const double alpha = rz / php;
    axpy(alpha, p, res.step);
    axpy(-alpha, hp, r);
    progressed = true;
    if (norm_l2(r) <= eta * g_norm) break;
    z = precond(r);
    const double rz_next = dot_l2(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t l = 0; l < p.size(); ++l) {
      p[l] *= beta;
      p[l] += z[l];
    }
  }
  return res;
}

/// Picard fixed-point candidate -(beta A)^{-1}[projected force], turned into
/// a search direction by subtracting the current iterate, pre-scaled by the
/// step-memory factor alpha_tilde.
inline CoeffFields picard_step(const IterateState& st, const CoeffFields& g, const RegConfig& reg,
                               double alpha_tilde) {
  CoeffFields step = zero_like(g);
  for (std::size_t l = 0; l < g.size(); ++l) {
    // force part of the gradient: F_l = g_l - beta A[v_l]
    VectorField force = g[l];
    axpy(-reg.beta, apply_reg_operator(st.vc.coeffs[l], reg), force);
    VectorField candidate = invert_reg_operator(force, reg);
    candidate *= -1.0;
    candidate -= st.vc.coeffs[l];
    candidate *= alpha_tilde;
    step[l] = std::move(candidate);
  }
  return step;
}

struct LineSearchResult {
  bool success = false;
  double alpha = 0.0;
  long trials = 0;
  VelocityCoefficients v;
  Trajectory m;
  ObjectiveReport rep;
};

/// Backtracking line search under the Armijo condition
/// J(v + a s) <= J(v) + c a <g,s>, starting at a = 1. Each trial costs one
/// forward solve. Fails (stagnation signal) once a falls below
/// shrink^max_line_search or if s is not a descent direction.
inline LineSearchResult armijo_line_search(const VelocityCoefficients& vc, const CoeffFields& step,
                                           double j_current, double g_dot_step,
                                           const ScalarField& m_T, const ScalarField& m_R,
                                           const TimeGrid& tg, const RegConfig& reg,
                                           const SolverConfig& cfg) {
  LineSearchResult res;
  if (!(g_dot_step < 0.0)) return res;

  double alpha = 1.0;
  for (int trial = 0; trial <= cfg.max_line_search; ++trial) {
    VelocityCoefficients v_try = vc;
    for (std::size_t l = 0; l < step.size(); ++l) axpy(alpha, step[l], v_try.coeffs[l]);
    auto [rep, m] = evaluate_objective(v_try, m_T, m_R, tg, reg);
    ++res.trials;
    if (rep.j <= j_current + cfg.armijo_c * alpha * g_dot_step) {
      res.success = true;
      res.alpha = alpha;
      res.v = std::move(v_try);
      res.m = std::move(m);
      res.rep = rep;
      return res;
    }
    alpha *= cfg.armijo_shrink;
  }
  return res;  // stagnation at machine precision
}

/// Outer iteration: evaluate J and g, test convergence, compute the search
/// direction (Picard / Newton-PCG / Gauss-Newton-PCG), rescale it by 0.5
/// until CFL-stable, line search, accept, re-solve state and adjoint.
inline OuterResult outer_loop(const ScalarField& m_T, const ScalarField& m_R,
                              const VelocityCoefficients& vc0, const SolverConfig& cfg,
                              const RegConfig& reg, const TimeGrid& tg,
                              const IterationCallback& callback = {}) {
  reg.validate();
  OuterResult out;
  out.v = vc0;
  IterationLog& log = out.log;

  IterateState st = build_state(out.v, m_T, m_R, tg);
  log.n_pde += 2;
  ObjectiveReport rep = objective_from_state(st, m_R, reg);
  CoeffFields g = reduced_gradient(st, tg, reg);

  double alpha_tilde = 1.0;
  auto push_row = [&](long k, double alpha, long inner, long trials, double step_inf) {
    IterationRecord row;
    row.k = k;
    row.j = rep.j;
    row.l2_half = rep.l2_half;
    row.s = rep.s;
    row.g_inf = norm_inf(g);
    row.g_l2 = norm_l2(g);
    row.alpha = alpha;
    row.alpha_tilde = alpha_tilde;
    row.inner = inner;
    row.trials = trials;
    row.step_inf = step_inf;
    row.n_pde = log.n_pde;
    log.rows.push_back(row);
    if (callback) callback(row);
  };
  push_row(0, 0.0, 0, 0, 0.0);

  const double g0_l2 = log.rows.front().g_l2;
  const bool gn = cfg.method == Method::GNPCG;

  for (long k = 1;; ++k) {
    std::string reason;
    if (check_convergence(log, cfg, norm_inf(out.v.coeffs), &reason)) {
      out.status = reason == "C5" ? SolveStatus::MaxIterations
                   : reason == "stagnation" ? SolveStatus::Stagnated
                                            : SolveStatus::Converged;
      out.stop_reason = reason;
      return out;
    }
    if (k > cfg.n_opt) {
      out.status = SolveStatus::MaxIterations;
      out.stop_reason = "C5";
      return out;
    }

    // Search direction.
    CoeffFields step;
    long inner = 0;
    if (cfg.method == Method::Picard) {
      step = picard_step(st, g, reg, cfg.picard_step_memory ? alpha_tilde : 1.0);
    } else {
      const double eta = std::min(0.5, std::sqrt(log.rows.back().g_l2 / g0_l2));
      long matvecs = 0;
      PcgResult pcg = pcg_solve(st, g, tg, reg, cfg, gn, eta, &matvecs);
      log.n_pde += 2 * matvecs;
      inner = pcg.iters;
      step = std::move(pcg.step);
    }

    // Rescale by 0.5 until the trial iterate is CFL-stable.
    {
      int rescale = 0;
      VelocityCoefficients trial = out.v;
      axpy(1.0, step, trial.coeffs);
      while (!cfl_ok(trial, tg)) {
        if (++rescale > cfg.max_cfl_rescale) {
          out.status = SolveStatus::Stagnated;
          out.stop_reason = "cfl_rescale_exhausted";
          return out;
        }
        for (VectorField& sl : step) sl *= 0.5;
        trial = out.v;
        axpy(1.0, step, trial.coeffs);
      }
    }

    const double g_dot_step = dot_l2(g, step);
    LineSearchResult ls =
        armijo_line_search(out.v, step, rep.j, g_dot_step, m_T, m_R, tg, reg, cfg);
    log.n_pde += ls.trials;
    if (!ls.success) {
      out.status = SolveStatus::Stagnated;
      out.stop_reason = "line_search_failure";
      return out;
    }

    if (cfg.method == Method::Picard && cfg.picard_step_memory)
      alpha_tilde = ls.alpha == 1.0 ? 2.0 * alpha_tilde : alpha_tilde * ls.alpha;

    const double step_inf = ls.alpha * norm_inf(step);
    out.v = std::move(ls.v);
    st = build_state(out.v, std::move(ls.m), m_R, tg);
    log.n_pde += 2;
    rep = objective_from_state(st, m_R, reg);
    g = reduced_gradient(st, tg, reg);
    push_row(k, ls.alpha, inner, ls.trials, step_inf);
  }
}

}  // namespace flowreg
