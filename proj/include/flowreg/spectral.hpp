#pragma once

#include <cmath>
#include <complex>

#include "flowreg/errors.hpp"
#include "flowreg/fft.hpp"
#include "flowreg/field.hpp"

namespace flowreg {

enum class RegKind { H1, H2 };

/// Regularization setup: operator choice, weight beta, incompressibility
/// switch gamma. The Stokes scheme pairs gamma=1 with the H1 operator.
struct RegConfig {
  RegKind kind = RegKind::H2;
  double beta = 1e-3;
  int gamma = 0;

  /// beta = 0 is admitted only for diagnostic Hessian assembly (the
  /// unregularized spectrum study); optimization requires beta > 0.
  void validate(bool allow_zero_beta = false) const {
    if (beta < 0.0 || (!allow_zero_beta && beta == 0.0))
      throw OutOfRange("RegConfig: beta must be positive");
    if (gamma != 0 && gamma != 1) throw OutOfRange("RegConfig: gamma must be 0 or 1");
    if (gamma == 1 && kind != RegKind::H1)
      throw OutOfRange("RegConfig: incompressible scheme requires the H1 operator");
  }
};

namespace detail {

/// Wavenumber for odd-order derivative multipliers: the Nyquist mode is
/// zeroed so i*k stays conjugate-symmetric on the real half-spectrum.
inline double wave_odd(int w, bool nyquist) { return nyquist ? 0.0 : static_cast<double>(w); }

/// Spectral symbol |k|^2 with the Nyquist mode kept (real even-order symbol).
inline double k_squared(int w1, int w2) {
  return static_cast<double>(w1) * w1 + static_cast<double>(w2) * w2;
}

/// Symbol of the regularization operator A: |k|^2 for H1 (-Lap), |k|^4 for
/// H2 (Lap^2).
inline double reg_symbol(RegKind kind, double ksq) {
  return kind == RegKind::H1 ? ksq : ksq * ksq;
}

}  // namespace detail

/// Spectral gradient: multiplication by i*k per axis, Nyquist modes of the
/// first-derivative multipliers zeroed.
inline VectorField spectral_grad(const ScalarField& s) {
  const Spectrum hat = forward_fft(s);
  Spectrum d1(s.grid), d2(s.grid);
  for (int k1 = 0; k1 < hat.nk1; ++k1) {
    const double w1 = detail::wave_odd(hat.wave1(k1), hat.is_nyquist1(k1));
    for (int k2 = 0; k2 < hat.nk2; ++k2) {
      const double w2 = detail::wave_odd(hat.wave2(k2), hat.is_nyquist2(k2));
      const std::complex<double> z = hat.at(k1, k2);
      d1.at(k1, k2) = std::complex<double>(-w1 * z.imag(), w1 * z.real());
      d2.at(k1, k2) = std::complex<double>(-w2 * z.imag(), w2 * z.real());
    }
  }
  return VectorField(inverse_fft(std::move(d1)), inverse_fft(std::move(d2)));
}

/// Spectral divergence d1 w^1 + d2 w^2.
inline ScalarField spectral_div(const VectorField& w) {
  const Spectrum h1 = forward_fft(w.comp[0]);
  const Spectrum h2 = forward_fft(w.comp[1]);
  Spectrum out(w.grid);
  for (int k1 = 0; k1 < out.nk1; ++k1) {
    const double w1 = detail::wave_odd(out.wave1(k1), out.is_nyquist1(k1));
    for (int k2 = 0; k2 < out.nk2; ++k2) {
      const double w2 = detail::wave_odd(out.wave2(k2), out.is_nyquist2(k2));
      const std::complex<double> z = w1 * h1.at(k1, k2) + w2 * h2.at(k1, k2);
      out.at(k1, k2) = std::complex<double>(-z.imag(), z.real());
    }
  }
  return inverse_fft(std::move(out));
}

/// Spectral Laplacian (even symbol, Nyquist modes kept).
inline ScalarField spectral_laplacian(const ScalarField& s) {
  Spectrum hat = forward_fft(s);
  for (int k1 = 0; k1 < hat.nk1; ++k1)
    for (int k2 = 0; k2 < hat.nk2; ++k2)
      hat.at(k1, k2) *= -detail::k_squared(hat.wave1(k1), hat.wave2(k2));
  return inverse_fft(std::move(hat));
}

/// A[w]: -Lap w (H1) or Lap^2 w (H2), componentwise. The weight beta is not
/// applied here.
inline VectorField apply_reg_operator(const VectorField& w, const RegConfig& cfg) {
  VectorField out(w.grid);
  for (int c = 0; c < 2; ++c) {
    Spectrum hat = forward_fft(w.comp[c]);
    for (int k1 = 0; k1 < hat.nk1; ++k1)
      for (int k2 = 0; k2 < hat.nk2; ++k2)
        hat.at(k1, k2) *=
            detail::reg_symbol(cfg.kind, detail::k_squared(hat.wave1(k1), hat.wave2(k2)));
    out.comp[c] = inverse_fft(std::move(hat));
  }
  return out;
}

/// (beta*A)^{-1}[w] with the zero-frequency multiplier of the inverse set to
/// exactly one, so constant fields pass through unchanged. This makes the
/// operator invertible despite the constant kernel of A and keeps constant
/// body forces recoverable.
inline VectorField invert_reg_operator(const VectorField& w, const RegConfig& cfg) {
  cfg.validate();
  VectorField out(w.grid);
  for (int c = 0; c < 2; ++c) {
    Spectrum hat = forward_fft(w.comp[c]);
    for (int k1 = 0; k1 < hat.nk1; ++k1)
      for (int k2 = 0; k2 < hat.nk2; ++k2) {
        const double ksq = detail::k_squared(hat.wave1(k1), hat.wave2(k2));
        hat.at(k1, k2) *=
            ksq == 0.0 ? 1.0 : 1.0 / (cfg.beta * detail::reg_symbol(cfg.kind, ksq));
      }
    out.comp[c] = inverse_fft(std::move(hat));
  }
  return out;
}

/// Leray projection K[f] = f - Grad(Lap^{-1}(Div f)). Modewise this removes
/// the component along the derivative wavenumber vector; the quotient uses
/// the same Nyquist-zeroed wavenumbers as Div and Grad so that K is exactly
/// idempotent and Div(K[f]) vanishes identically. The zero mode (and pure
/// Nyquist modes, which are divergence-free under these operators) pass
/// through unchanged.
inline VectorField leray_project(const VectorField& f) {
  Spectrum h1 = forward_fft(f.comp[0]);
  Spectrum h2 = forward_fft(f.comp[1]);
  for (int k1 = 0; k1 < h1.nk1; ++k1) {
    const double w1 = detail::wave_odd(h1.wave1(k1), h1.is_nyquist1(k1));
    for (int k2 = 0; k2 < h1.nk2; ++k2) {
      const double w2 = detail::wave_odd(h1.wave2(k2), h1.is_nyquist2(k2));
      const double kk = w1 * w1 + w2 * w2;
      if (kk == 0.0) continue;
      const std::complex<double> proj = (w1 * h1.at(k1, k2) + w2 * h2.at(k1, k2)) / kk;
      h1.at(k1, k2) -= w1 * proj;
      h2.at(k1, k2) -= w2 * proj;
    }
  }
  return VectorField(inverse_fft(std::move(h1)), inverse_fft(std::move(h2)));
}

/// Spectral inverse Laplacian with the mean-zero gauge: the zero mode (and
/// the pure Nyquist modes, consistent with the first-derivative convention)
/// map to zero. Used for on-demand pressure reconstruction p = -Lap^{-1}(Div f).
inline ScalarField spectral_inv_laplacian(const ScalarField& s) {
  Spectrum hat = forward_fft(s);
  for (int k1 = 0; k1 < hat.nk1; ++k1) {
    const double w1 = detail::wave_odd(hat.wave1(k1), hat.is_nyquist1(k1));
    for (int k2 = 0; k2 < hat.nk2; ++k2) {
      const double w2 = detail::wave_odd(hat.wave2(k2), hat.is_nyquist2(k2));
      const double kk = w1 * w1 + w2 * w2;
      hat.at(k1, k2) *= kk == 0.0 ? 0.0 : -1.0 / kk;
    }
  }
  return inverse_fft(std::move(hat));
}

/// Periodic Gaussian smoothing: multiply the spectrum by exp(-sigma^2|k|^2/2).
/// The zero mode is untouched, so the mean is preserved exactly.
inline ScalarField gaussian_smooth(const ScalarField& s, double sigma) {
  if (sigma <= 0.0) throw OutOfRange("gaussian_smooth: sigma must be positive");
  Spectrum hat = forward_fft(s);
  for (int k1 = 0; k1 < hat.nk1; ++k1)
    for (int k2 = 0; k2 < hat.nk2; ++k2)
      hat.at(k1, k2) *=
          std::exp(-0.5 * sigma * sigma * detail::k_squared(hat.wave1(k1), hat.wave2(k2)));
  return inverse_fft(std::move(hat));
}

/// Default presmoothing width 2*pi/min(n_x).
inline double default_sigma(const Grid2& g) { return kTwoPi / std::min(g.n[0], g.n[1]); }

}  // namespace flowreg
