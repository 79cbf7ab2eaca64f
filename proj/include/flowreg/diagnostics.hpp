#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <complex>
#include <numeric>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "flowreg/optimality.hpp"
#include "flowreg/optimizer.hpp"
#include "flowreg/problems.hpp"
#include "flowreg/transport.hpp"

namespace flowreg {

struct DetStats {
  double min = 1.0, max = 1.0, mean = 1.0, std = 0.0;
};

inline DetStats det_stats(const ScalarField& det) {
  DetStats s;
  s.min = *std::min_element(det.v.begin(), det.v.end());
  s.max = *std::max_element(det.v.begin(), det.v.end());
  s.mean = std::accumulate(det.v.begin(), det.v.end(), 0.0) / det.v.size();
  double var = 0.0;
  for (double d : det.v) var += (d - s.mean) * (d - s.mean);
  s.std = std::sqrt(var / det.v.size());
  return s;
}

/// Quantities of interest of a registration run: relative L2 mismatch,
/// relative objective and gradient reduction, deformation-gradient
/// statistics and the temporal power spectrum of the coefficient fields.
struct MeasureSet {
  double l2_rel = 0.0;        ///< ||m_1 - m_R||_2^2 / ||m_T - m_R||_2^2
  double dj_rel = 0.0;        ///< J(v*) / J(v_0)
  double grad_rel_inf = 0.0;  ///< ||g*||_inf / ||g_0||_inf
  DetStats det_stats;
  std::vector<double> power_spectrum;  ///< ||v_l||_2 / ||{v_l'}||_2
};

inline MeasureSet compute_measures(const RegistrationProblem& prob, const VelocityCoefficients& vc,
                                   const ScalarField& m1, const IterationLog& log,
                                   const TimeGrid& tg) {
  ScalarField denom = prob.m_T;
  denom -= prob.m_R;
  const double d = dot_l2(denom, denom);
  if (d == 0.0)
    throw IdenticalImages("compute_measures: relative measures undefined for m_T = m_R");

  MeasureSet ms;
  ScalarField num = m1;
  num -= prob.m_R;
  ms.l2_rel = dot_l2(num, num) / d;
  if (!log.rows.empty()) {
    ms.dj_rel = log.last().j / log.rows.front().j;
    ms.grad_rel_inf =
        log.rows.front().g_inf > 0.0 ? log.last().g_inf / log.rows.front().g_inf : 0.0;
  }
  ms.det_stats = det_stats(solve_defgrad(vc, tg).det());

  const double total = norm_l2(vc.coeffs);
  ms.power_spectrum.resize(vc.n_c());
  for (int l = 0; l < vc.n_c(); ++l)
    ms.power_spectrum[l] = total > 0.0 ? norm_l2(vc.coeffs[l]) / total : (l == 0 ? 1.0 : 0.0);
  return ms;
}

/// Eigendecomposition summary of the densely assembled reduced Hessian.
struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  ///< sorted (see assemble_dense_hessian)
  double min_re = 0.0, max_re = 0.0, max_abs_im = 0.0;
  std::vector<std::pair<long, CoeffFields>> eigenvectors;  ///< selected 1-based indices
};

namespace detail {

inline CoeffFields unflatten(const Eigen::VectorXd& x, const Grid2& g, const ChebBasis& basis) {
  CoeffFields out(static_cast<std::size_t>(basis.n_c), VectorField(g));
  const long N = g.size();
  long idx = 0;
  for (int l = 0; l < basis.n_c; ++l)
    for (int c = 0; c < 2; ++c)
      for (long p = 0; p < N; ++p) out[l].comp[c].v[static_cast<std::size_t>(p)] = x[idx++];
  return out;
}

}  // namespace detail

/// Assemble the reduced Hessian densely by applying the matrix-vector
/// product to every unit vector (parallel across columns; the iterate state
/// is shared read-only) and compute its full eigendecomposition with a
/// general complex eigensolver — the matrix is only numerically symmetric.
/// Eigenvalues are sorted by magnitude, descending for the unregularized
/// problem (beta = 0) and ascending otherwise. eigvec_indices selects
/// 1-based positions in that order for which the eigenvector fields are
/// returned.
inline SpectrumReport assemble_dense_hessian(const IterateState& st, const TimeGrid& tg,
                                             const RegConfig& reg, bool gn,
                                             const std::vector<long>& eigvec_indices = {}) {
  const Grid2& g = st.vc.grid();
  const long n = 2l * g.size() * st.vc.n_c();
  if (n > 8192) throw TooLarge("assemble_dense_hessian: system order exceeds 8192");

  Eigen::MatrixXd H(n, n);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  std::atomic<long> next_col{0};
  auto worker = [&] {
    for (long col; (col = next_col.fetch_add(1)) < n;) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[col] = 1.0;
      const CoeffFields he = hessian_matvec(detail::unflatten(e, g, st.vc.basis), st, tg, reg, gn);
      long idx = 0;
      for (int l = 0; l < st.vc.n_c(); ++l)
        for (int c = 0; c < 2; ++c)
          for (long p = 0; p < g.size(); ++p)
            H(idx++, col) = he[static_cast<std::size_t>(l)].comp[c].v[static_cast<std::size_t>(p)];
    }
  };
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  Eigen::EigenSolver<Eigen::MatrixXd> es(H, /*computeEigenvectors=*/!eigvec_indices.empty());

  SpectrumReport rep;
  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0l);
  const auto& ev = es.eigenvalues();
  const bool descending = reg.beta == 0.0;
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    return descending ? std::abs(ev[a]) > std::abs(ev[b]) : std::abs(ev[a]) < std::abs(ev[b]);
  });

  rep.eigenvalues.reserve(static_cast<std::size_t>(n));
  rep.min_re = std::numeric_limits<double>::infinity();
  rep.max_re = -std::numeric_limits<double>::infinity();
  rep.max_abs_im = 0.0;
  for (long i : order) {
    const std::complex<double> z = ev[i];
    rep.eigenvalues.push_back(z);
    rep.min_re = std::min(rep.min_re, z.real());
    rep.max_re = std::max(rep.max_re, z.real());
    rep.max_abs_im = std::max(rep.max_abs_im, std::abs(z.imag()));
  }

  for (long pos : eigvec_indices) {
    if (pos < 1 || pos > n) continue;
    const long src = order[static_cast<std::size_t>(pos - 1)];
    Eigen::VectorXd re(n);
    for (long i = 0; i < n; ++i) re[i] = es.eigenvectors()(i, src).real();
    const double nrm = re.norm();
    if (nrm > 0.0) re /= nrm;
    rep.eigenvectors.emplace_back(pos, detail::unflatten(re, g, st.vc.basis));
  }
  return rep;
}

/// Render-ready maps of a registration result: the pointwise residual
/// |m_R - m_1|, det(F_1) clamped to [0,2] (black - orange - white display
/// convention), and the deformed grid y = x - u_1 sampled on a coarse
/// lattice.
struct MapSet {
  ScalarField residual;
  ScalarField det_f1;                                ///< clamped to [0,2]
  std::vector<std::array<double, 4>> grid_overlay;   ///< rows (x1, x2, y1, y2)
};

inline MapSet export_maps(const RegistrationProblem& prob, const VelocityCoefficients& vc,
                          const ScalarField& m1, const TimeGrid& tg, int overlay_stride = 0) {
  MapSet maps;
  maps.residual = ScalarField(prob.grid());
  for (std::size_t i = 0; i < maps.residual.v.size(); ++i)
    maps.residual.v[i] = std::abs(prob.m_R.v[i] - m1.v[i]);

  maps.det_f1 = solve_defgrad(vc, tg).det();
  for (double& d : maps.det_f1.v) d = std::clamp(d, 0.0, 2.0);

  const VectorField u = solve_displacement(vc, tg);
  const Grid2& g = prob.grid();
  const int stride = overlay_stride > 0 ? overlay_stride : std::max(1, g.n[0] / 32);
  for (int i = 0; i < g.n[0]; i += stride)
    for (int j = 0; j < g.n[1]; j += stride) {
      const double x1 = g.coord(0, i), x2 = g.coord(1, j);
      maps.grid_overlay.push_back({x1, x2, x1 - u.comp[0](i, j), x2 - u.comp[1](i, j)});
    }
  return maps;
}

}  // namespace flowreg
