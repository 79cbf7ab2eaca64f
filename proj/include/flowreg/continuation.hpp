#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "flowreg/optimizer.hpp"
#include "flowreg/problems.hpp"
#include "flowreg/transport.hpp"

namespace flowreg {

/// Bounds and policy for the automatic regularization-parameter search.
struct ContinuationConfig {
  double eps_F = 0.1;                       ///< lower bound on det(F_1), smoothness schemes
  double eps_theta = std::numbers::pi / 16; ///< grid-angle bound, Stokes scheme
  double beta_init = 1.0;
  double beta_min = 1e-6;
  double rel_l2_floor = 1e-2;   ///< stop when the relative L2 measure changes less than this
  double binary_stop_frac = 0.05;
};

struct RegularityReport {
  double min_det = 1.0;
  double min_angle = 0.0;
  double max_angle = 0.0;
  bool admissible = true;
};

struct ContinuationStep {
  double beta = 0.0;
  double min_det = 1.0;
  double min_angle = 0.0, max_angle = 0.0;
  double rel_l2 = 0.0;
  bool admissible = true;
};

struct ContinuationTrace {
  std::vector<ContinuationStep> steps;
  std::string termination;      ///< binary_converged | beta_floor | l2_floor | identical_images
  double delta_beta_min = 0.0;  ///< |delta beta| at termination of the binary search
};

struct ContinuationResult {
  double beta_star = 0.0;
  VelocityCoefficients v;
  ContinuationTrace trace;
};

/// Deformation-regularity check. Smoothness schemes are admissible when
/// min det(F_1) >= eps_F; the Stokes scheme instead bounds the deformed-cell
/// angles. The angle at a node is the counterclockwise angle from the
/// deformed edge y(x+h1 e1)-y(x) to y(x+h2 e2)-y(x) in (0,2pi) (computed
/// from the displacement so no periodic unwrapping is needed); admissible
/// when all angles lie in [eps_theta, 2pi - eps_theta]. An orientation flip
/// shows up as a reflex angle, which the upper bound rejects.
inline RegularityReport check_regularity(const VelocityCoefficients& vc, const TimeGrid& tg,
                                         const ContinuationConfig& cfg, const RegConfig& scheme) {
  RegularityReport rep;
  const TensorTrajectoryFinal F = solve_defgrad(vc, tg);
  const ScalarField det = F.det();
  rep.min_det = *std::min_element(det.v.begin(), det.v.end());

  if (scheme.gamma == 1) {
    const VectorField u = solve_displacement(vc, tg);
    const Grid2& g = u.grid;
    double amin = std::numeric_limits<double>::infinity();
    double amax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n[0]; ++i) {
      const int ip = (i + 1) % g.n[0];
      for (int j = 0; j < g.n[1]; ++j) {
        const int jp = (j + 1) % g.n[1];
        const double a1 = g.h[0] - (u.comp[0](ip, j) - u.comp[0](i, j));
        const double a2 = -(u.comp[1](ip, j) - u.comp[1](i, j));
        const double b1 = -(u.comp[0](i, jp) - u.comp[0](i, j));
        const double b2 = g.h[1] - (u.comp[1](i, jp) - u.comp[1](i, j));
        double ang = std::atan2(a1 * b2 - a2 * b1, a1 * b1 + a2 * b2);
        if (ang <= 0.0) ang += 2.0 * std::numbers::pi;
        amin = std::min(amin, ang);
        amax = std::max(amax, ang);
      }
    }
    rep.min_angle = amin;
    rep.max_angle = amax;
    rep.admissible = amin >= cfg.eps_theta && amax <= 2.0 * std::numbers::pi - cfg.eps_theta;
  } else {
    rep.min_angle = rep.max_angle = std::numbers::pi / 2;
    rep.admissible = rep.min_det >= cfg.eps_F;
  }
  return rep;
}

using ContinuationCallback = std::function<void(const ContinuationStep&)>;

/// Automatic estimation of the regularization weight. Phase 1 solves at
/// beta = beta_init and divides beta by 10 until the regularity bound is
/// breached (early exits: the beta floor, or a change in the relative L2
/// measure below rel_l2_floor, in which case the previous beta already told
/// the whole story). Phase 2 bisects between the tightest admissible and the
/// breaching beta until the next probe would move beta by less than
/// binary_stop_frac times the phase-1 breach value. Each solve warm-starts
/// from the previous solution.
inline ContinuationResult run_continuation(const RegistrationProblem& prob, int n_c,
                                           const ContinuationConfig& cfg,
                                           const SolverConfig& solver_cfg,
                                           const RegConfig& reg_template, const TimeGrid& tg,
                                           const ContinuationCallback& callback = {}) {
  ContinuationResult out;
  ScalarField diff0 = prob.m_T;
  diff0 -= prob.m_R;
  const double mismatch0 = dot_l2(diff0, diff0);

  VelocityCoefficients v(prob.grid(), n_c);
  RegConfig reg = reg_template;

  auto solve_at = [&](double beta) {
    reg.beta = beta;
    OuterResult res = outer_loop(prob.m_T, prob.m_R, v, solver_cfg, reg, tg);
    v = res.v;
    ContinuationStep step;
    step.beta = beta;
    if (mismatch0 > 0.0) step.rel_l2 = 2.0 * res.log.last().l2_half / mismatch0;
    const RegularityReport r = check_regularity(v, tg, cfg, reg);
    step.min_det = r.min_det;
    step.min_angle = r.min_angle;
    step.max_angle = r.max_angle;
    step.admissible = r.admissible;
    out.trace.steps.push_back(step);
    if (callback) callback(step);
    return step;
  };

  ContinuationStep cur = solve_at(cfg.beta_init);
  if (!cur.admissible)
    throw BoundViolatedAtStart("run_continuation: regularity bound breached at beta_init");
  out.beta_star = cfg.beta_init;
  VelocityCoefficients best = v;

  if (mismatch0 == 0.0) {
    out.trace.termination = "identical_images";
    out.v = std::move(best);
    return out;
  }

  // Phase 1: order-of-magnitude reduction.
  double beta_breach = 0.0;
  while (true) {
    const double next = cur.beta / 10.0;
    if (next < cfg.beta_min) {
      out.trace.termination = "beta_floor";
      out.v = std::move(best);
      return out;
    }
    const ContinuationStep probe = solve_at(next);
    if (!probe.admissible) {
      beta_breach = next;
      break;
    }
    out.beta_star = next;
    best = v;
    if (std::abs(cur.rel_l2 - probe.rel_l2) < cfg.rel_l2_floor) {
      out.trace.termination = "l2_floor";
      out.v = std::move(best);
      return out;
    }
    cur = probe;
  }

  // Phase 2: bisection between the breach and the tightest admissible beta.
  double lo = beta_breach, hi = out.beta_star;
  const double threshold = cfg.binary_stop_frac * beta_breach;
  while (true) {
    const double delta = 0.5 * (hi - lo);
    out.trace.delta_beta_min = delta;
    if (delta < threshold) break;
    const ContinuationStep probe = solve_at(lo + delta);
    if (probe.admissible) {
      hi = lo + delta;
      out.beta_star = hi;
      best = v;
    } else {
      lo = lo + delta;
    }
  }
  out.trace.termination = "binary_converged";
  out.v = std::move(best);
  return out;
}

}  // namespace flowreg
