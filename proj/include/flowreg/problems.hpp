#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "flowreg/chebyshev.hpp"
#include "flowreg/field.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/time_grid.hpp"
#include "flowreg/transport.hpp"

namespace flowreg {

enum class Provenance { Synthetic, Ingested };

/// A registration problem: reference image m_R (fixed) and template image
/// m_T (transported), both on one grid with intensities in [0,1].
struct RegistrationProblem {
  ScalarField m_R;
  ScalarField m_T;
  double sigma = 0.0;  ///< presmoothing width applied during construction (0 = none)
  Provenance provenance = Provenance::Synthetic;
  std::string reference_path;
  std::string template_path;

  const Grid2& grid() const { return m_R.grid; }
};

struct SyntheticProblem {
  RegistrationProblem problem;
  /// Ground-truth recovery field: the stationary velocity that transports
  /// m_T back onto m_R (the negated generating field).
  VelocityCoefficients v_star;
};

/// Synthetic sinusoidal problem. The reference image is a smooth band-limited
/// bump in [0,1]; the template is produced by transporting it one unit of
/// time under a stationary sinusoidal generating field of the form
/// amplitude * sin(.) cos(.) per component. The plain variant
///   w^i(x) = amplitude * sin(x^i) cos(x^i)
/// is a pure gradient field (the potential is 0.5*amplitude*sum_i sin^2 x^i),
/// so its Leray projection vanishes identically; the divergence-free variant
/// used for Stokes testing therefore swaps the axes,
///   w^1(x) = amplitude * sin(x^2) cos(x^2),  w^2(x) = amplitude * sin(x^1) cos(x^1),
/// which is exactly solenoidal (and is still passed through leray_project to
/// pin the constraint). Registering the pair is exactly solvable: at
/// v = v_star the final state matches m_R up to discretization error and the
/// adjoint vanishes.
inline SyntheticProblem synth_sinusoidal(const Grid2& grid, const TimeGrid& tg,
                                         double amplitude = 0.5, bool project_divfree = false) {
  RegistrationProblem prob;
  prob.m_R = ScalarField::sample(
      grid, [](double x1, double x2) { return 0.5 + 0.5 * std::sin(3 * x1) * std::sin(3 * x2); });

  VectorField gen =
      project_divfree
          ? VectorField::sample(
                grid, [&](double, double x2) { return amplitude * std::sin(x2) * std::cos(x2); },
                [&](double x1, double) { return amplitude * std::sin(x1) * std::cos(x1); })
          : VectorField::sample(
                grid, [&](double x1, double) { return amplitude * std::sin(x1) * std::cos(x1); },
                [&](double, double x2) { return amplitude * std::sin(x2) * std::cos(x2); });
  if (project_divfree) gen = leray_project(gen);

  VelocityCoefficients gen_vc(grid, 1);
  gen_vc.coeffs[0] = gen;
  prob.m_T = solve_state(prob.m_R, gen_vc, tg).final();
  prob.provenance = Provenance::Synthetic;

  VelocityCoefficients v_star = gen_vc;
  v_star.coeffs[0] *= -1.0;
  return SyntheticProblem{std::move(prob), std::move(v_star)};
}

}  // namespace flowreg
