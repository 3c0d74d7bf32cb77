#pragma once

// Loop-weighted path Hamiltonian in the single-excitation subspace.
//
// Node labels are 1-based in every public accessor and report; storage is
// plain 0-based std::vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qst/errors.hpp"

namespace qst {

struct ChainSpec {
  int n = 0;
  double q = 0.0;
  /// Loop weights sit at nodes d and n+1-d.
  int d = 2;

  int k() const noexcept { return n - 3; }
};

inline void validate(const ChainSpec& spec) {
  if (spec.n < 4)
    throw InvalidSpec("chain length must be at least 4, got " + std::to_string(spec.n));
  if (spec.d <= 1 || spec.d > spec.n / 2)
    throw InvalidSpec("offset d must satisfy 1 < d <= n/2, got d=" + std::to_string(spec.d));
  if (!std::isfinite(spec.q) || spec.q < 0.0)
    throw InvalidSpec("loop weight must be finite and non-negative");
}

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
struct TridiagonalHamiltonian {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t size() const noexcept { return diag.size(); }

  /// y = H x
  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      if (i > 0) acc += offdiag[i - 1] * x[i - 1];
      if (i + 1 < n) acc += offdiag[i] * x[i + 1];
      y[i] = acc;
    }
    return y;
  }

  /// Largest |diagonal entry|, i.e. the loop weight for a built chain.
  double max_abs_diag() const noexcept {
    double m = 0.0;
    for (double a : diag) m = std::max(m, std::abs(a));
    return m;
  }
};

inline TridiagonalHamiltonian build_hamiltonian(const ChainSpec& spec) {
  validate(spec);
  const auto n = static_cast<std::size_t>(spec.n);
  TridiagonalHamiltonian h{std::vector<double>(n, 0.0), std::vector<double>(n - 1, 1.0)};
  h.diag[static_cast<std::size_t>(spec.d - 1)] = spec.q;
  h.diag[n - static_cast<std::size_t>(spec.d)] = spec.q;
  return h;
}

struct Disc {
  double center;
  double radius;

  double lo() const noexcept { return center - radius; }
  double hi() const noexcept { return center + radius; }
  bool contains(double x) const noexcept { return x >= lo() && x <= hi(); }
};

inline std::vector<Disc> gershgorin_discs(const TridiagonalHamiltonian& h) {
  const std::size_t n = h.size();
  std::vector<Disc> discs(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(h.offdiag[i - 1]);
    if (i + 1 < n) r += std::abs(h.offdiag[i]);
    discs[i] = {h.diag[i], r};
  }
  return discs;
}

/// Entry j goes to entry n+1-j.
inline std::vector<double> reflect(std::span<const double> v) {
  return {v.rbegin(), v.rend()};
}

/// True when H commutes with reflection (diag and offdiag are palindromes).
inline bool is_reflection_symmetric(const TridiagonalHamiltonian& h) {
  const auto& a = h.diag;
  const auto& b = h.offdiag;
  for (std::size_t i = 0, j = a.size() - 1; i < j; ++i, --j)
    if (a[i] != a[j]) return false;
  if (!b.empty())
    for (std::size_t i = 0, j = b.size() - 1; i < j; ++i, --j)
      if (b[i] != b[j]) return false;
  return true;
}

}  // namespace qst
