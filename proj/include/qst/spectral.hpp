#pragma once

// Symmetric tridiagonal eigensolver: Sturm-sequence bisection for
// eigenvalues, shifted inverse iteration for eigenvectors.
//
// A reflection-symmetric matrix splits into a symmetric and an alternating
// sector, each an unreduced tridiagonal block with a simple spectrum. The full
// decomposition is computed sector by sector. This matters for large loop
// weights: the two eigenvalues near Q differ by roughly Q^-(n-3) and are
// indistinguishable in double precision on the full matrix, while each
// sector holds exactly one of them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qst/chain.hpp"
#include "qst/errors.hpp"

namespace qst {

enum class Parity { symmetric, alternating };

inline const char* to_string(Parity p) noexcept {
  return p == Parity::symmetric ? "symmetric" : "alternating";
}

inline constexpr double kDefaultEigenTol = 1e-12;
inline constexpr double kMinEigenGap = 1e-13;

/// Eigenvector residual target: 1e-10 * max(1, |Q|).
inline double residual_target(const TridiagonalHamiltonian& h) {
  return 1e-10 * std::max(1.0, h.max_abs_diag());
}

/// Number of eigenvalues strictly less than x.
inline std::size_t sturm_count(const TridiagonalHamiltonian& h, double x) {
  const std::size_t n = h.size();
  double bmax = 1.0;
  for (double b : h.offdiag) bmax = std::max(bmax, b * b);
  const double pivmin = std::numeric_limits<double>::min() * bmax;

  // Pivot recurrence of the LDL^T factorization of H - xI. A zero pivot is
  // nudged to +pivmin so an eigenvalue exactly at x is not counted.
  std::size_t count = 0;
  double pivot = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double next = h.diag[i] - x;
    if (i > 0) next -= h.offdiag[i - 1] * h.offdiag[i - 1] / pivot;
    if (std::abs(next) < pivmin) next = pivmin;
    if (next < 0.0) ++count;
    pivot = next;
  }
  return count;
}

/// Eigenvalues in (lo, hi], ascending, each bracketed to width <= tol.
inline std::vector<double> eigenvalues_bisection(const TridiagonalHamiltonian& h, double lo,
                                                 double hi, double tol = kDefaultEigenTol) {
  if (!(lo < hi) || !(tol > 0.0)) throw Error("eigenvalues_bisection: need lo < hi and tol > 0");
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto count_le = [&](double x) { return sturm_count(h, std::nextafter(x, inf)); };

  const std::size_t first = count_le(lo);
  const std::size_t last = count_le(hi);
  std::vector<double> out;
  out.reserve(last - first);
  double floor = lo;
  for (std::size_t i = first; i < last; ++i) {
    // invariant: count_le(a) <= i < count_le(b), so eigenvalue i is in (a, b]
    double a = floor;
    double b = hi;
    while (b - a > tol) {
      const double mid = a + 0.5 * (b - a);
      if (mid <= a || mid >= b) break;
      if (count_le(mid) > i)
        b = mid;
      else
        a = mid;
    }
    out.push_back(a + 0.5 * (b - a));
    floor = a;
  }
  return out;
}

namespace detail {

inline double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

inline void normalize(std::vector<double>& v) {
  const double s = norm2(v);
  for (double& x : v) x /= s;
}

inline double residual_norm(const TridiagonalHamiltonian& h, std::span<const double> v,
                            double lambda) {
  auto hv = h.apply(v);
  double acc = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    const double r = hv[i] - lambda * v[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

/// LU factorization of (H - shift I) with partial pivoting, LAPACK gttrf style.
class ShiftedTridiagonalLU {
public:
  ShiftedTridiagonalLU(const TridiagonalHamiltonian& h, double shift)
      : d_(h.diag), dl_(h.offdiag), du_(h.offdiag), pivoted_(h.size(), false) {
    const std::size_t n = d_.size();
    for (double& x : d_) x -= shift;
    du2_.assign(n > 2 ? n - 2 : 0, 0.0);

    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(h.diag[i]) + 2.0);
    const double tiny = std::numeric_limits<double>::epsilon() * scale;

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] == 0.0) d_[i] = tiny;
        const double fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      } else {
        const double fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const double temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        pivoted_[i] = true;
      }
    }
    if (n > 0 && d_[n - 1] == 0.0) d_[n - 1] = tiny;
  }

  void solve_in_place(std::vector<double>& b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!pivoted_[i]) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t i = n >= 3 ? n - 2 : 0; i-- > 0;)
      b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
  }

private:
  std::vector<double> d_, dl_, du_, du2_;
  std::vector<bool> pivoted_;
};

struct IterationResult {
  std::vector<double> vector;
  double residual;
};

/// Inverse iteration on a tridiagonal block; stops two solves after reaching
/// the residual target or after max_iter solves, whichever comes first.
inline IterationResult inverse_iterate_best(const TridiagonalHamiltonian& h, double lambda,
                                            double target, int max_iter) {
  const std::size_t n = h.size();
  std::mt19937_64 rng(0x5eed5eedULL + n);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  normalize(x);

  const ShiftedTridiagonalLU lu(h, lambda);
  double res = std::numeric_limits<double>::infinity();
  // Two solves past the residual target purge what is left of nearby
  // eigenvectors, which the residual alone barely sees when gaps are small.
  int extra = 2;
  for (int it = 0; it < max_iter; ++it) {
    lu.solve_in_place(x);
    if (!std::isfinite(norm2(x))) throw NoConvergence("inverse iteration overflowed");
    normalize(x);
    res = residual_norm(h, x, lambda);
    if (res <= target && extra-- == 0) break;
  }
  return {std::move(x), res};
}

inline std::vector<double> inverse_iterate(const TridiagonalHamiltonian& h, double lambda,
                                           double target, int max_iter = 12) {
  auto r = inverse_iterate_best(h, lambda, target, max_iter);
  if (!(r.residual <= target))
    throw NoConvergence("inverse iteration residual " + std::to_string(r.residual) +
                        " above target " + std::to_string(target));
  return std::move(r.vector);
}

struct Sector {
  TridiagonalHamiltonian block;
  Parity parity;
};

/// Restriction of a reflection-symmetric H to its symmetric and alternating
/// sectors, written in the basis (e_j +- e_{n+1-j})/sqrt(2) (plus e_center).
inline std::array<Sector, 2> split_sectors(const TridiagonalHamiltonian& h) {
  const std::size_t n = h.size();
  const std::size_t p = n / 2;
  const auto& a = h.diag;
  const auto& b = h.offdiag;
  TridiagonalHamiltonian sym, alt;
  sym.diag.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(p));
  sym.offdiag.assign(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(p - 1));
  alt = sym;
  if (n % 2 == 0) {
    sym.diag[p - 1] += b[p - 1];
    alt.diag[p - 1] -= b[p - 1];
  } else {
    sym.diag.push_back(a[p]);
    sym.offdiag.push_back(std::sqrt(2.0) * b[p - 1]);
  }
  return {Sector{std::move(sym), Parity::symmetric}, Sector{std::move(alt), Parity::alternating}};
}

/// Maps a sector vector back to the full chain.
inline std::vector<double> expand(std::span<const double> u, Parity parity, std::size_t n) {
  const std::size_t p = n / 2;
  const double s = 1.0 / std::sqrt(2.0);
  const double sign = parity == Parity::symmetric ? 1.0 : -1.0;
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    v[i] = s * u[i];
    v[n - 1 - i] = sign * s * u[i];
  }
  if (n % 2 == 1 && parity == Parity::symmetric) v[p] = u[p];
  return v;
}

inline std::pair<double, double> gershgorin_span(const TridiagonalHamiltonian& h) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Disc& disc : gershgorin_discs(h)) {
    lo = std::min(lo, disc.lo());
    hi = std::max(hi, disc.hi());
  }
  return {lo - 1.0, hi + 1.0};
}

inline void require_simple(std::span<const double> values, Parity parity) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] - values[i - 1] <= kMinEigenGap)
      throw Error(std::string("eigenvalue gap below 1e-13 in ") + to_string(parity) +
                  " sector at lambda=" + std::to_string(values[i]));
}

inline Parity parity_of(std::span<const double> v) {
  const auto r = reflect(v);
  return std::inner_product(v.begin(), v.end(), r.begin(), 0.0) >= 0.0 ? Parity::symmetric
                                                                        : Parity::alternating;
}

inline void require_symmetric(const TridiagonalHamiltonian& h) {
  if (h.size() < 2 || !is_reflection_symmetric(h))
    throw Error("operation requires a reflection-symmetric Hamiltonian");
}

}  // namespace detail

/// Unit eigenvector for an eigenvalue estimate. For reflection-symmetric H
/// the result is a pure symmetric or alternating vector.
inline std::vector<double> eigenvector_inverse_iteration(const TridiagonalHamiltonian& h,
                                                         double lambda) {
  const double target = residual_target(h);
  if (!is_reflection_symmetric(h)) return detail::inverse_iterate(h, lambda, target);

  std::vector<double> best;
  double best_res = std::numeric_limits<double>::infinity();
  for (const auto& sector : detail::split_sectors(h)) {
    if (sector.block.diag.empty()) continue;
    auto r = detail::inverse_iterate_best(sector.block, lambda, target, 12);
    auto v = detail::expand(r.vector, sector.parity, h.size());
    const double res = detail::residual_norm(h, v, lambda);
    if (res < best_res) {
      best_res = res;
      best = std::move(v);
    }
  }
  if (!(best_res <= target))
    throw NoConvergence("eigenvector residual " + std::to_string(best_res) + " above target " +
                        std::to_string(target));
  return best;
}

struct SpectralDecomposition {
  /// Ascending; strictly increasing within each parity class.
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  std::vector<Parity> parities;
  /// Indices (into eigenvalues) that fall in the perturbed Gershgorin discs.
  std::vector<std::size_t> outlier_indices;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

/// Eigenvalues plus the first and last eigenvector entries only. Enough for
/// the end-to-end transfer amplitude at O(n) memory.
struct EndpointSpectrum {
  std::vector<double> eigenvalues;
  std::vector<double> first;
  std::vector<double> last;
  std::vector<Parity> parities;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

namespace detail {

/// Outlier indices by disc membership, populated only when the perturbed
/// discs are disjoint from the unperturbed ones.
inline std::vector<std::size_t> classify_outliers(const TridiagonalHamiltonian& h,
                                                  std::span<const double> eigenvalues) {
  std::vector<Disc> perturbed, bulk;
  for (const Disc& disc : gershgorin_discs(h)) (disc.center != 0.0 ? perturbed : bulk).push_back(disc);
  if (perturbed.empty()) return {};
  double bulk_hi = -std::numeric_limits<double>::infinity();
  double bulk_lo = std::numeric_limits<double>::infinity();
  for (const Disc& disc : bulk) {
    bulk_hi = std::max(bulk_hi, disc.hi());
    bulk_lo = std::min(bulk_lo, disc.lo());
  }
  for (const Disc& disc : perturbed)
    if (disc.lo() <= bulk_hi && disc.hi() >= bulk_lo) return {};

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    for (const Disc& disc : perturbed)
      if (disc.contains(eigenvalues[i])) {
        out.push_back(i);
        break;
      }
  return out;
}

/// v^T H v / v^T v accumulated in long double. The quotient is second-order
/// accurate in the eigenvector error, so it is good to long double precision.
inline long double rayleigh_quotient_wide(const TridiagonalHamiltonian& h, std::span<const double> v) {
  const std::size_t n = h.size();
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double hv = static_cast<long double>(h.diag[i]) * v[i];
    if (i > 0) hv += static_cast<long double>(h.offdiag[i - 1]) * v[i - 1];
    if (i + 1 < n) hv += static_cast<long double>(h.offdiag[i]) * v[i + 1];
    num += hv * v[i];
    den += static_cast<long double>(v[i]) * v[i];
  }
  return num / den;
}

inline double rayleigh_quotient(const TridiagonalHamiltonian& h, std::span<const double> v) {
  return static_cast<double>(rayleigh_quotient_wide(h, v));
}

struct Eigenpair {
  double value;
  Parity parity;
  std::vector<double> vector;
};

template <class Sink>
void for_each_sector_eigenpair(const TridiagonalHamiltonian& h, double tol, Sink&& sink) {
  require_symmetric(h);
  const double target = residual_target(h);
  for (const auto& sector : split_sectors(h)) {
    if (sector.block.diag.empty()) continue;
    const auto [lo, hi] = gershgorin_span(sector.block);
    const auto values = eigenvalues_bisection(sector.block, lo, hi, tol);
    require_simple(values, sector.parity);
    for (double lambda : values) {
      auto v = expand(inverse_iterate(sector.block, lambda, target), sector.parity, h.size());
      sink(Eigenpair{rayleigh_quotient(h, v), sector.parity, std::move(v)});
    }
  }
}

}  // namespace detail

inline SpectralDecomposition full_decomposition(const TridiagonalHamiltonian& h,
                                                double tol = kDefaultEigenTol) {
  std::vector<detail::Eigenpair> pairs;
  pairs.reserve(h.size());
  detail::for_each_sector_eigenpair(h, tol, [&](detail::Eigenpair&& p) { pairs.push_back(std::move(p)); });
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.value < b.value; });

  SpectralDecomposition out;
  for (auto& p : pairs) {
    out.eigenvalues.push_back(p.value);
    out.parities.push_back(detail::parity_of(p.vector));
    out.eigenvectors.push_back(std::move(p.vector));
  }
  out.outlier_indices = detail::classify_outliers(h, out.eigenvalues);
  return out;
}

inline EndpointSpectrum endpoint_spectrum(const TridiagonalHamiltonian& h,
                                          double tol = kDefaultEigenTol) {
  struct Row {
    double value, first, last;
    Parity parity;
  };
  std::vector<Row> rows;
  rows.reserve(h.size());
  detail::for_each_sector_eigenpair(h, tol, [&](detail::Eigenpair&& p) {
    rows.push_back({p.value, p.vector.front(), p.vector.back(), p.parity});
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.value < b.value; });
  EndpointSpectrum out;
  for (const Row& r : rows) {
    out.eigenvalues.push_back(r.value);
    out.first.push_back(r.first);
    out.last.push_back(r.last);
    out.parities.push_back(r.parity);
  }
  return out;
}

inline EndpointSpectrum endpoints(const SpectralDecomposition& decomp) {
  EndpointSpectrum out;
  out.eigenvalues = decomp.eigenvalues;
  out.parities = decomp.parities;
  for (const auto& v : decomp.eigenvectors) {
    out.first.push_back(v.front());
    out.last.push_back(v.back());
  }
  return out;
}

}  // namespace qst
