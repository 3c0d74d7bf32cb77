#pragma once

// Closed-form bulk eigenpairs of the d = 2 chain.
//
// A bulk eigenvalue lambda = 2 cos(theta) with a symmetric eigenvector
// solves S(theta) = Q; with an alternating eigenvector it solves
// A(theta) = Q. Here k = n - 3 and
//
//   F(theta) = -1 / (2 cos theta) + cos theta
//   S(theta) = F(theta) - tan(k theta / 2) sin theta
//   A(theta) = F(theta) + cot(k theta / 2) sin theta

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qst/errors.hpp"
#include "qst/spectral.hpp"

namespace qst {

/// A trig factor whose magnitude is within a few ulps of its argument's
/// rounding error is treated as an exact zero.
template <std::floating_point T>
bool near_zero_trig(T value, T argument) noexcept {
  return std::abs(value) <= 4 * std::numeric_limits<T>::epsilon() * std::max(T(1), std::abs(argument));
}
inline constexpr double kDefaultRootTol = 1e-10;
inline constexpr int kRootIterationCap = 200;
/// Brackets built from analytic pole positions stay this far (relative) inside.
inline constexpr double kPoleMargin = 1e-9;

// F, S and A also accept long double: near pi/2 they are steep enough that
// rounding theta to a double moves them by more than 1e-8 Q.

template <std::floating_point T>
T F(T theta) {
  const T c = std::cos(theta);
  if (near_zero_trig(c, theta)) throw PoleAt("cos(theta)", static_cast<double>(theta));
  return -1 / (2 * c) + c;
}

template <std::floating_point T>
T F_prime(T theta) {
  const T c = std::cos(theta);
  if (near_zero_trig(c, theta)) throw PoleAt("cos(theta)", static_cast<double>(theta));
  const T s = std::sin(theta);
  return -s / (2 * c * c) - s;
}

template <std::floating_point T>
T S(T theta, int k) {
  const T half = T(0.5) * k * theta;
  const T ch = std::cos(half);
  if (near_zero_trig(ch, half)) throw PoleAt("cos(k*theta/2)", static_cast<double>(theta));
  return F(theta) - std::sin(half) / ch * std::sin(theta);
}

template <std::floating_point T>
T A(T theta, int k) {
  const T half = T(0.5) * k * theta;
  const T sh = std::sin(half);
  if (near_zero_trig(sh, half)) throw PoleAt("sin(k*theta/2)", static_cast<double>(theta));
  return F(theta) + std::cos(half) / sh * std::sin(theta);
}

/// The Q-equation for a parity: S for symmetric modes, A for alternating.
template <std::floating_point T>
T mode_function(Parity parity, T theta, int k) {
  return parity == Parity::symmetric ? S(theta, k) : A(theta, k);
}

struct Bracket {
  double lo;
  double hi;
};

/// Singular points of S (parity symmetric) or A (alternating) in [lo, hi]:
/// theta = pi/2, plus (2j+1)pi/k for S or 2j pi/k for A. Ascending.
inline std::vector<double> mode_poles(Parity parity, int k, double lo, double hi) {
  constexpr double pi = std::numbers::pi;
  std::vector<double> out;
  // theta = (2j + offset) pi / k
  const double offset = parity == Parity::symmetric ? 1.0 : 0.0;
  const long jmin = static_cast<long>(std::ceil((lo * k / pi - offset) / 2.0));
  const long jmax = static_cast<long>(std::floor((hi * k / pi - offset) / 2.0));
  for (long j = jmin; j <= jmax; ++j) {
    const double p = (2.0 * static_cast<double>(j) + offset) * pi / k;
    if (p >= lo && p <= hi) out.push_back(p);
  }
  const double half_pi = pi / 2.0;
  if (half_pi >= lo && half_pi <= hi) {
    auto it = std::lower_bound(out.begin(), out.end(), half_pi);
    if (it == out.end() || std::abs(*it - half_pi) > 1e-15) out.insert(it, half_pi);
  }
  return out;
}

/// Splits [lo, hi] at the poles of S or A; every returned bracket keeps a
/// relative margin of kPoleMargin from the poles that bound it.
inline std::vector<Bracket> pole_free_intervals(Parity parity, int k, double lo, double hi) {
  struct Edge {
    double at;
    bool pole;
  };
  const double tol = kPoleMargin * std::abs(lo);
  std::vector<Edge> edges{{lo, false}};
  for (double p : mode_poles(parity, k, lo, hi)) {
    if (p - lo <= tol)
      edges.front().pole = true;
    else if (hi - p <= tol)
      edges.push_back({hi, true});
    else
      edges.push_back({p, true});
  }
  if (edges.back().at < hi) edges.push_back({hi, false});

  std::vector<Bracket> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i].pole ? edges[i].at * (1.0 + kPoleMargin) : edges[i].at;
    const double b = edges[i + 1].pole ? edges[i + 1].at * (1.0 - kPoleMargin) : edges[i + 1].at;
    if (a < b) out.push_back({a, b});
  }
  return out;
}

namespace detail {

inline double solve_mode(Parity parity, double q, int k, Bracket bracket, double tol) {
  if (!(bracket.lo < bracket.hi)) throw NoSignChange("empty bracket");
  if (!mode_poles(parity, k, bracket.lo, bracket.hi).empty())
    throw PoleInBracket(std::string("pole of ") + (parity == Parity::symmetric ? "S" : "A") +
                        " inside [" + std::to_string(bracket.lo) + ", " +
                        std::to_string(bracket.hi) + "]");

  auto g = [&](double theta) { return mode_function(parity, theta, k) - q; };
  double a = bracket.lo;
  double b = bracket.hi;
  double ga = g(a);
  const double gb = g(b);
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  if ((ga < 0.0) == (gb < 0.0))
    throw NoSignChange("no sign change of " + std::string(parity == Parity::symmetric ? "S" : "A") +
                       " - Q on [" + std::to_string(a) + ", " + std::to_string(b) + "]");

  double best = std::abs(ga) < std::abs(gb) ? a : b;
  double best_val = std::min(std::abs(ga), std::abs(gb));
  for (int it = 0; it < kRootIterationCap; ++it) {
    const double mid = a + 0.5 * (b - a);
    if (mid <= a || mid >= b) break;
    const double gm = g(mid);
    if (std::abs(gm) < best_val) {
      best_val = std::abs(gm);
      best = mid;
    }
    if (gm == 0.0) break;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = mid;
      ga = gm;
    } else {
      b = mid;
    }
  }
  // Where S or A is steep, one ulp in theta can move g by more than the
  // tolerance; a bracket collapsed to adjacent doubles still pins the root.
  const bool collapsed = std::nextafter(a, b) >= b;
  const double attainable = collapsed ? std::abs(ga - g(b)) : 0.0;
  if (best_val > std::max(tol * std::max(1.0, std::abs(q)), attainable))
    throw NoConvergence("root residual " + std::to_string(best_val) + " above tolerance");
  return best;
}

}  // namespace detail

/// Root of S(theta) = Q inside a pole-free sign-change bracket.
inline double solve_S(double q, int k, Bracket bracket, double tol = kDefaultRootTol) {
  return detail::solve_mode(Parity::symmetric, q, k, bracket, tol);
}

/// Root of A(theta) = Q inside a pole-free sign-change bracket.
inline double solve_A(double q, int k, Bracket bracket, double tol = kDefaultRootTol) {
  return detail::solve_mode(Parity::alternating, q, k, bracket, tol);
}

struct ModeSolution {
  double theta = 0.0;
  Parity parity = Parity::symmetric;
  int k = 0;
  double lambda = 0.0;
  /// psi(1)^2 of the normalized eigenvector.
  double endpoint_weight = 0.0;
};

struct ModeVector {
  ModeSolution mode;
  /// Unit vector of length k + 3.
  std::vector<double> vector;
};

/// Builds (B, a_0, ..., a_k, +-B) and normalizes it. Symmetric:
/// B = cos(k theta/2)/lambda, a_j = cos((k-2j) theta/2). Alternating:
/// B = sin(k theta/2)/lambda, a_j = sin((k-2j) theta/2), last entry -B.
inline ModeVector mode_vector(double theta, Parity parity, int k) {
  const double lambda = 2.0 * std::cos(theta);
  if (near_zero_trig(lambda, theta)) throw DegenerateLambda("lambda = 2cos(theta) vanishes");
  const bool sym = parity == Parity::symmetric;
  const double half = 0.5 * k * theta;
  const double factor = sym ? std::cos(half) : std::sin(half);
  if (near_zero_trig(factor, half))
    throw PoleAt(sym ? "cos(k*theta/2)" : "sin(k*theta/2)", theta);

  const auto len = static_cast<std::size_t>(k) + 3;
  std::vector<double> v(len);
  const double endpoint = factor / lambda;
  v.front() = endpoint;
  v.back() = sym ? endpoint : -endpoint;
  double interior = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double arg = 0.5 * static_cast<double>(k - 2 * j) * theta;
    const double a = sym ? std::cos(arg) : std::sin(arg);
    v[static_cast<std::size_t>(j) + 1] = a;
    interior += a * a;
  }
  const double b2 = endpoint * endpoint;
  const double norm = std::sqrt(2.0 * b2 + interior);
  for (double& x : v) x /= norm;

  ModeVector out;
  out.mode = {theta, parity, k, lambda, b2 / (2.0 * b2 + interior)};
  out.vector = std::move(v);
  return out;
}

/// theta = arccos(lambda/2) for a computed bulk eigenvector, with lambda
/// taken from the long double Rayleigh quotient. Near the band edges arccos
/// magnifies the rounding of lambda to a double far beyond 1e-8 Q in S or A.
inline long double bulk_angle(const TridiagonalHamiltonian& h, std::span<const double> v) {
  const long double lambda = detail::rayleigh_quotient_wide(h, v);
  if (!(std::abs(lambda) < 2.0L)) throw InvalidSpec("bulk_angle needs |lambda| < 2");
  return std::acos(lambda / 2);
}

/// For odd n the d = 2 chain has the exact eigenvalue 0, with eigenvector
/// (1, 0, -1, 0, 1, ...) up to normalization. Its angle theta = pi/2 is a
/// pole of F, so neither closed form reaches it.
inline bool has_zero_mode(int n) noexcept { return n % 2 == 1; }

inline std::vector<double> zero_mode_vector(int n) {
  if (!has_zero_mode(n)) throw InvalidSpec("zero mode exists for odd n only");
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>((n + 1) / 2));
  for (int i = 0; i < n; i += 2) v[static_cast<std::size_t>(i)] = (i / 2) % 2 == 0 ? scale : -scale;
  return v;
}

/// Index of the zero mode in an ascending spectrum of the n-node chain:
/// the eigenvalue of least magnitude when n is odd, none otherwise.
inline std::optional<std::size_t> zero_mode_index(std::span<const double> eigenvalues, int n) {
  if (!has_zero_mode(n) || eigenvalues.empty()) return std::nullopt;
  const auto it = std::min_element(eigenvalues.begin(), eigenvalues.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  return static_cast<std::size_t>(it - eigenvalues.begin());
}

}  // namespace qst
