#pragma once

// Time evolution U(t) = exp(itH) in the single-excitation subspace.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "qst/chain.hpp"
#include "qst/errors.hpp"
#include "qst/spectral.hpp"

namespace qst {

using cplx = std::complex<double>;

/// U(t)_{1,n} = sum_j exp(i t lambda_j) psi_j(1) psi_j(n).
inline cplx transfer_amplitude(const EndpointSpectrum& spec, double t) {
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < spec.size(); ++j)
    acc += std::polar(spec.first[j] * spec.last[j], t * spec.eigenvalues[j]);
  return acc;
}

inline cplx transfer_amplitude(const SpectralDecomposition& decomp, double t) {
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < decomp.size(); ++j) {
    const auto& v = decomp.eigenvectors[j];
    acc += std::polar(v.front() * v.back(), t * decomp.eigenvalues[j]);
  }
  return acc;
}

inline double fidelity(const EndpointSpectrum& spec, double t) {
  return std::abs(transfer_amplitude(spec, t));
}

/// Row `row` (1-based) of U(t), computed from the full decomposition.
inline std::vector<cplx> propagator_row(const SpectralDecomposition& decomp, std::size_t row,
                                        double t) {
  const std::size_t n = decomp.size();
  std::vector<cplx> out(n, cplx{0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = decomp.eigenvectors[j];
    const cplx phase = std::polar(v[row - 1], t * decomp.eigenvalues[j]);
    for (std::size_t m = 0; m < n; ++m) out[m] += phase * v[m];
  }
  return out;
}

struct FidelityCurve {
  std::vector<double> times;
  std::vector<double> values;
};

inline FidelityCurve fidelity_curve(const EndpointSpectrum& spec, double t_lo, double t_hi,
                                    std::size_t samples) {
  if (!(t_lo < t_hi) || samples < 2) throw Error("fidelity_curve: need t_lo < t_hi and samples >= 2");
  FidelityCurve curve;
  curve.times.resize(samples);
  curve.values.resize(samples);
  const double step = (t_hi - t_lo) / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = i + 1 == samples ? t_hi : t_lo + step * static_cast<double>(i);
    curve.times[i] = t;
    curve.values[i] = fidelity(spec, t);
  }
  return curve;
}

struct Peak {
  double time;
  double fidelity;
};

/// Grid scan of [t_guess - radius, t_guess + radius] (clipped at 0), then
/// golden-section refinement around the best sample.
inline Peak peak_search(const EndpointSpectrum& spec, double t_guess, double radius,
                        std::size_t grid = 2001) {
  if (!(radius > 0.0)) throw Error("peak_search: radius must be positive");
  const double lo = std::max(0.0, t_guess - radius);
  const double hi = t_guess + radius;
  const double step = (hi - lo) / static_cast<double>(grid - 1);

  Peak best{t_guess, fidelity(spec, t_guess)};
  std::size_t best_i = 0;
  double best_grid = -1.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double f = fidelity(spec, lo + step * static_cast<double>(i));
    if (f > best_grid) {
      best_grid = f;
      best_i = i;
    }
  }

  double a = lo + step * static_cast<double>(best_i == 0 ? 0 : best_i - 1);
  double b = std::min(hi, lo + step * static_cast<double>(best_i + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = fidelity(spec, x1);
  double f2 = fidelity(spec, x2);
  for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = fidelity(spec, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = fidelity(spec, x2);
    }
  }
  const Peak refined = f1 > f2 ? Peak{x1, f1} : Peak{x2, f2};
  const Peak sampled{lo + step * static_cast<double>(best_i), best_grid};
  for (const Peak& p : {sampled, refined})
    if (p.fidelity > best.fidelity) best = p;
  return best;
}

struct TransferWindow {
  double threshold = 0.0;
  /// Maximal intervals where the (linearly interpolated) curve is >= threshold.
  std::vector<std::pair<double, double>> intervals;
  double peak_time = 0.0;
  double peak_value = 0.0;

  /// Width of the interval containing the peak, 0 when there is none.
  double peak_width() const {
    for (const auto& [a, b] : intervals)
      if (peak_time >= a && peak_time <= b) return b - a;
    return 0.0;
  }
};

inline TransferWindow window_at_threshold(const FidelityCurve& curve, double threshold) {
  TransferWindow w;
  w.threshold = threshold;
  const auto& t = curve.times;
  const auto& f = curve.values;
  if (t.empty()) return w;

  const auto peak = std::max_element(f.begin(), f.end());
  w.peak_value = *peak;
  w.peak_time = t[static_cast<std::size_t>(peak - f.begin())];

  auto crossing = [&](std::size_t i) {
    // threshold crossing between samples i and i+1
    const double s = (threshold - f[i]) / (f[i + 1] - f[i]);
    return t[i] + s * (t[i + 1] - t[i]);
  };
  bool inside = f[0] >= threshold;
  double start = t[0];
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const bool next = f[i + 1] >= threshold;
    if (!inside && next) {
      start = crossing(i);
      inside = true;
    } else if (inside && !next) {
      w.intervals.emplace_back(start, crossing(i));
      inside = false;
    }
  }
  if (inside) w.intervals.emplace_back(start, t.back());
  return w;
}

/// Dense row-major complex matrix.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<cplx> data;

  explicit DenseMatrix(std::size_t size = 0) : n(size), data(size * size, cplx{0.0, 0.0}) {}

  static DenseMatrix identity(std::size_t size) {
    DenseMatrix m(size);
    for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
    return m;
  }

  /// 0-based access.
  cplx& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }

  DenseMatrix operator*(const DenseMatrix& o) const {
    DenseMatrix r(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l) {
        const cplx a = (*this)(i, l);
        if (a == cplx{0.0, 0.0}) continue;
        for (std::size_t j = 0; j < n; ++j) r(i, j) += a * o(l, j);
      }
    return r;
  }

  DenseMatrix adjoint() const {
    DenseMatrix r(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  double norm1() const {
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += std::abs((*this)(i, j));
      best = std::max(best, col);
    }
    return best;
  }
};

inline constexpr std::size_t kOracleMaxSize = 64;

/// exp(itH) by scaling and squaring of a truncated Taylor series. Independent
/// of the eigensolver; meant for small chains only.
inline DenseMatrix expm_oracle(const TridiagonalHamiltonian& h, double t) {
  const std::size_t n = h.size();
  if (n > kOracleMaxSize) throw SizeGuard("expm_oracle limited to n <= 64");

  DenseMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = cplx{0.0, t * h.diag[i]};
    if (i + 1 < n) {
      a(i, i + 1) = cplx{0.0, t * h.offdiag[i]};
      a(i + 1, i) = cplx{0.0, t * h.offdiag[i]};
    }
  }
  // Scale so ||A / 2^s||_1 <= 1/2.
  const double norm = a.norm1();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);
  for (cplx& x : a.data) x *= scale;

  DenseMatrix result = DenseMatrix::identity(n);
  DenseMatrix term = DenseMatrix::identity(n);
  for (int j = 1; j <= 40; ++j) {
    term = term * a;
    const double inv = 1.0 / j;
    for (cplx& x : term.data) x *= inv;
    for (std::size_t i = 0; i < result.data.size(); ++i) result.data[i] += term.data[i];
    if (term.norm1() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

}  // namespace qst
