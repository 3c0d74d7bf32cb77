#pragma once

// Parameter selection for high-fidelity end-to-end transfer on the d = 2
// chain.
//
// Theorem mode fixes c = pi sqrt(eps) / 20, picks the smallest m with
//
//   k + (2c/pi) sqrt(k) + 1/2  <  8m + 1  <  k + sqrt(k)/pi - 1/2,
//
// sets theta0 = (16m+2) pi / (4k), Q = F(theta0), and solves S = Q on
// ((16m+1) pi/(4k), theta0) and A = Q on (theta0, (16m+3) pi/(4k)).
// Relaxed mode takes Q as given and uses the S- and A-roots nearest pi/2.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "qst/chain.hpp"
#include "qst/errors.hpp"
#include "qst/modes.hpp"

namespace qst {

enum class DesignMode { theorem, relaxed };

inline const char* to_string(DesignMode m) noexcept {
  return m == DesignMode::theorem ? "theorem" : "relaxed";
}

/// Open interval that 8m+1 must fall into.
struct MWindow {
  double lower;
  double upper;
};

inline MWindow m_window(int k, double c) {
  const double rk = std::sqrt(static_cast<double>(k));
  constexpr double pi = std::numbers::pi;
  return {k + 2.0 * c / pi * rk + 0.5, k + rk / pi - 0.5};
}

/// Smallest k whose window is at least 8 wide, so that it always holds an
/// integer congruent to 1 mod 8.
inline long guaranteed_feasible_k(double c) {
  const double root = 9.0 * std::numbers::pi / (1.0 - 2.0 * c);
  return static_cast<long>(std::ceil(root * root));
}

inline long select_m(int k, double c) {
  if (!(c > 0.0 && c < 0.5)) throw InvalidSpec("c must lie in (0, 1/2)");
  if (k < 1) throw InvalidSpec("k must be positive");
  const MWindow w = m_window(k, c);
  long m = static_cast<long>(std::floor((w.lower - 1.0) / 8.0));
  while (8.0 * static_cast<double>(m) + 1.0 <= w.lower) ++m;
  if (!(8.0 * static_cast<double>(m) + 1.0 < w.upper))
    throw NoFeasibleM(w.lower, w.upper, guaranteed_feasible_k(c));
  return m;
}

struct TransferDesign {
  int n = 0;
  int k = 0;
  std::optional<double> epsilon;
  std::optional<double> c;
  std::optional<long> m;
  std::optional<double> theta0;
  double q = 0.0;
  double theta1 = 0.0;  // symmetric mode, S(theta1) = Q
  double theta2 = 0.0;  // alternating mode, A(theta2) = Q
  double t0 = 0.0;
  double w1 = 0.0;  // endpoint weights psi(1)^2
  double w2 = 0.0;
  double fidelity_lower_bound = 0.0;
  DesignMode mode = DesignMode::theorem;
  bool corollary_satisfied = false;
  std::optional<MWindow> window;

  ChainSpec chain() const { return {n, q, 2}; }
  double lambda1() const { return 2.0 * std::cos(theta1); }
  double lambda2() const { return 2.0 * std::cos(theta2); }
};

/// Lower bound 2(w1 + w2) - 1 on |U(t0)_{1,n}|. Non-positive means no certificate.
inline double fidelity_bound(double w1, double w2) {
  constexpr double slack = 1e-12;
  if (!(w1 >= 0.0 && w1 <= 0.5 + slack && w2 >= 0.0 && w2 <= 0.5 + slack))
    throw InvalidSpec("endpoint weights must lie in [0, 1/2]");
  return 2.0 * (w1 + w2) - 1.0;
}

/// Conditions 2(|cos theta1|) <= sqrt(eps/(k+1)) |cos(k theta1/2)| and the
/// alternating analogue with sin(k theta2/2).
inline bool verify_corollary(double theta1, double theta2, int k, double epsilon) {
  const double scale = std::sqrt(epsilon) / std::sqrt(static_cast<double>(k) + 1.0);
  const bool sym_ok = 2.0 * std::abs(std::cos(theta1)) <= scale * std::abs(std::cos(0.5 * k * theta1));
  const bool alt_ok = 2.0 * std::abs(std::cos(theta2)) <= scale * std::abs(std::sin(0.5 * k * theta2));
  return sym_ok && alt_ok;
}

inline double predicted_transfer_time(double theta1, double theta2) {
  return std::numbers::pi / (2.0 * std::abs(std::cos(theta1) - std::cos(theta2)));
}

namespace detail {

inline void fill_from_roots(TransferDesign& d) {
  d.w1 = mode_vector(d.theta1, Parity::symmetric, d.k).mode.endpoint_weight;
  d.w2 = mode_vector(d.theta2, Parity::alternating, d.k).mode.endpoint_weight;
  d.t0 = predicted_transfer_time(d.theta1, d.theta2);
  d.fidelity_lower_bound = fidelity_bound(d.w1, d.w2);
  d.corollary_satisfied =
      d.epsilon.has_value() && verify_corollary(d.theta1, d.theta2, d.k, *d.epsilon);
}

}  // namespace detail

inline TransferDesign design_theorem(int n, double epsilon) {
  if (n < 4) throw InvalidSpec("chain length must be at least 4");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidSpec("epsilon must lie in (0, 1)");
  constexpr double pi = std::numbers::pi;

  TransferDesign d;
  d.mode = DesignMode::theorem;
  d.n = n;
  d.k = n - 3;
  d.epsilon = epsilon;
  d.c = pi * std::sqrt(epsilon) / 20.0;
  d.window = m_window(d.k, *d.c);
  d.m = select_m(d.k, *d.c);

  const double quarter = pi / (4.0 * d.k);
  const double base = 16.0 * static_cast<double>(*d.m);
  d.theta0 = (base + 2.0) * quarter;
  d.q = F(*d.theta0);
  try {
    d.theta1 = solve_S(d.q, d.k, {(base + 1.0) * quarter, *d.theta0});
    d.theta2 = solve_A(d.q, d.k, {*d.theta0, (base + 3.0) * quarter});
  } catch (const NoSignChange& e) {
    throw RootFailure(std::string("theorem bracket without sign change: ") + e.what());
  } catch (const PoleInBracket& e) {
    throw RootFailure(std::string("theorem bracket contains a pole: ") + e.what());
  }
  detail::fill_from_roots(d);
  return d;
}

namespace detail {

inline double nearest_root_above_half_pi(Parity parity, double q, int k) {
  constexpr double pi = std::numbers::pi;
  for (const Bracket& b : pole_free_intervals(parity, k, pi / 2.0, 3.0 * pi / 4.0)) {
    try {
      return detail::solve_mode(parity, q, k, b, kDefaultRootTol);
    } catch (const NoSignChange&) {
    }
  }
  throw RootFailure(std::string("no root of ") + (parity == Parity::symmetric ? "S" : "A") +
                    " = Q in (pi/2, 3pi/4)");
}

}  // namespace detail

/// Relaxed design for a given loop weight. When epsilon is supplied the
/// corollary conditions are checked against it.
inline TransferDesign design_for_Q(int n, double q, std::optional<double> epsilon = std::nullopt) {
  if (n < 4) throw InvalidSpec("chain length must be at least 4");
  if (!(q > 2.0) || !std::isfinite(q)) throw InvalidSpec("relaxed design needs Q > 2");
  TransferDesign d;
  d.mode = DesignMode::relaxed;
  d.n = n;
  d.k = n - 3;
  d.q = q;
  d.epsilon = epsilon;
  d.theta1 = detail::nearest_root_above_half_pi(Parity::symmetric, q, d.k);
  d.theta2 = detail::nearest_root_above_half_pi(Parity::alternating, q, d.k);
  detail::fill_from_roots(d);
  return d;
}

}  // namespace qst
