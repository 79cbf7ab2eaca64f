#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "flowreg/field.hpp"

namespace flowreg {

/// Normalized half-complex spectrum of a real field: nk1 x nk2 coefficients
/// with nk1 = n1, nk2 = n2/2 + 1 (real-input Hermitian layout). The forward
/// transform scales by 1/(n1*n2) so the inverse is plain accumulation and the
/// coefficient at (0,0) equals the field mean.
struct Spectrum {
  Grid2 grid;
  int nk1 = 0, nk2 = 0;
  std::vector<std::complex<double>> c;

  Spectrum() = default;
  explicit Spectrum(const Grid2& g)
      : grid(g), nk1(g.n[0]), nk2(g.n[1] / 2 + 1),
        c(static_cast<std::size_t>(nk1) * nk2) {}

  std::complex<double>& at(int k1, int k2) { return c[static_cast<std::size_t>(k1) * nk2 + k2]; }
  const std::complex<double>& at(int k1, int k2) const {
    return c[static_cast<std::size_t>(k1) * nk2 + k2];
  }

  /// Signed wavenumber along axis 0 for row index k1 (Nyquist stays +n/2).
  int wave1(int k1) const { return k1 <= grid.n[0] / 2 ? k1 : k1 - grid.n[0]; }
  /// Signed wavenumber along axis 1 for column index k2 (always >= 0 here).
  int wave2(int k2) const { return k2; }
  bool is_nyquist1(int k1) const { return k1 == grid.n[0] / 2; }
  bool is_nyquist2(int k2) const { return k2 == grid.n[1] / 2; }
};

namespace detail {

/// Per-grid FFTW plan pair. Plans are created with FFTW_UNALIGNED so they can
/// be executed on any caller buffer via the new-array interface; creation is
/// serialized (the FFTW planner is not thread-safe), execution is not.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  void forward(const Grid2& g, double* in, fftw_complex* out) {
    fftw_execute_dft_r2c(plans(g).r2c, in, out);
  }
  void inverse(const Grid2& g, fftw_complex* in, double* out) {
    fftw_execute_dft_c2r(plans(g).c2r, in, out);
  }

 private:
  struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
  };

  Plans& plans(const Grid2& g) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(g.n[0], g.n[1]);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    std::vector<double> re(static_cast<std::size_t>(g.size()));
    std::vector<std::complex<double>> co(static_cast<std::size_t>(g.n[0]) * (g.n[1] / 2 + 1));
    Plans p;
    p.r2c = fftw_plan_dft_r2c_2d(g.n[0], g.n[1], re.data(),
                                 reinterpret_cast<fftw_complex*>(co.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_2d(g.n[0], g.n[1], reinterpret_cast<fftw_complex*>(co.data()),
                                 re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    return cache_.emplace(key, p).first->second;
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, Plans> cache_;
};

}  // namespace detail

/// Forward real-to-complex transform, normalized by 1/(n1*n2).
inline Spectrum forward_fft(const ScalarField& s) {
  Spectrum out(s.grid);
  std::vector<double> in(s.v);  // r2c may not preserve input on all paths
  detail::PlanCache::instance().forward(s.grid, in.data(),
                                        reinterpret_cast<fftw_complex*>(out.c.data()));
  const double scale = 1.0 / static_cast<double>(s.grid.size());
  for (auto& z : out.c) z *= scale;
  return out;
}

/// Inverse transform. Takes the spectrum by value: the multi-dimensional
/// complex-to-real transform clobbers its input buffer.
inline ScalarField inverse_fft(Spectrum s) {
  ScalarField out(s.grid);
  detail::PlanCache::instance().inverse(s.grid, reinterpret_cast<fftw_complex*>(s.c.data()),
                                        out.v.data());
  return out;
}

}  // namespace flowreg
