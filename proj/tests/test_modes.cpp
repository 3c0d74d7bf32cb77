#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "qst/modes.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using qst::A;
using qst::F;
using qst::F_prime;
using qst::Parity;
using qst::S;

namespace {
constexpr double pi = std::numbers::pi;

// n = 1255 theorem design: k = 1252, m = 157
constexpr int kDesign = 1252;
const double theta0_design = 2514.0 * pi / 5008.0;
}  // namespace

TEST_CASE("F at reference angles", "[modes]") {
  CHECK_THAT(F(2 * pi / 3), WithinAbs(0.5, 1e-15));
  CHECK_THAT(F(3 * pi / 4), WithinAbs(0.0, 1e-15));
  // direct evaluation: 79.57165256364804
  CHECK_THAT(F(pi / 2 + 0.00628319), WithinRel(79.57165256364804, 1e-9));
  CHECK_THROWS_AS(F(pi / 2), qst::PoleAt);
}

TEST_CASE("F_prime closed form", "[modes]") {
  CHECK_THAT(F_prime(3 * pi / 4), WithinAbs(-std::sqrt(2.0), 1e-14));
  const double h = 1e-6;
  const double theta = 2 * pi / 3;
  CHECK_THAT(F_prime(theta), WithinAbs((F(theta + h) - F(theta - h)) / (2 * h), 1e-6));
  for (double t = pi / 2 + 1e-3; t < pi; t += 0.01) CHECK(F_prime(t) < 0.0);
}

TEST_CASE("derivative bounds k <= |F'| <= 3k/c^2 near pi/2", "[modes]") {
  const int k = kDesign;
  const double c = 0.0993;
  const double lo = pi / 2 + c / std::sqrt(k);
  const double hi = pi / 2 + 1.0 / (2.0 * std::sqrt(k));
  for (int i = 0; i < 1000; ++i) {
    const double x = lo + (hi - lo) * i / 999.0;
    const double d = std::abs(F_prime(x));
    REQUIRE(d >= k);
    REQUIRE(d <= 3.0 * k / (c * c));
  }
}

TEST_CASE("S and A reduce to F where the tangent or cotangent vanishes", "[modes]") {
  CHECK_THAT(S(3 * pi / 4, 8), WithinAbs(0.0, 1e-14));
  CHECK_THAT(S(2 * pi / 3, 6), WithinAbs(0.5, 1e-14));
  CHECK_THAT(A(3 * pi / 4, 2), WithinAbs(-std::sqrt(2.0) / 2.0, 1e-14));
  CHECK_THAT(A(3 * pi / 4, 4), WithinAbs(F(3 * pi / 4), 1e-14));
  CHECK_THAT(A(pi / 3, 3), WithinAbs(F(pi / 3), 1e-14));
}

TEST_CASE("quarter-phase identities at the design angle", "[modes]") {
  // k theta0 / 2 = 2 m pi + pi/4, so tan = cot = 1
  const double f = F(theta0_design);
  const double s = std::sin(theta0_design);
  CHECK_THAT(S(theta0_design, kDesign), WithinAbs(f - s, 1e-9));
  CHECK_THAT(A(theta0_design, kDesign), WithinAbs(f + s, 1e-9));
}

TEST_CASE("poles raise PoleAt", "[modes]") {
  // k theta / 2 = pi/2 exactly for theta = pi / k
  CHECK_THROWS_AS(S(pi / 4, 4), qst::PoleAt);
  CHECK_THROWS_AS(A(pi / 2, 4), qst::PoleAt);
  try {
    S(pi / 4, 4);
  } catch (const qst::PoleAt& e) {
    CHECK(e.factor() == "cos(k*theta/2)");
  }
}

TEST_CASE("pole enumeration", "[modes]") {
  const auto s_poles = qst::mode_poles(Parity::symmetric, 10, 0.0, pi);
  // (2j+1) pi / 10 plus pi/2 (already one of them)
  REQUIRE(s_poles.size() == 5);
  CHECK_THAT(s_poles[0], WithinAbs(pi / 10, 1e-15));
  CHECK_THAT(s_poles[2], WithinAbs(pi / 2, 1e-15));
  const auto a_poles = qst::mode_poles(Parity::alternating, 10, 0.1, 3.0);
  // 2j pi / 10 for j = 1..4, plus pi/2
  REQUIRE(a_poles.size() == 5);
  CHECK(std::is_sorted(a_poles.begin(), a_poles.end()));

  for (const auto& b : qst::pole_free_intervals(Parity::symmetric, 498, pi / 2, 3 * pi / 4)) {
    CHECK(b.lo < b.hi);
    CHECK(qst::mode_poles(Parity::symmetric, 498, b.lo, b.hi).empty());
  }
}

TEST_CASE("solve_S on the theorem bracket", "[modes]") {
  const double q = F(theta0_design);
  const double lo = 2513.0 * pi / 5008.0;
  const double theta1 = qst::solve_S(q, kDesign, {lo, theta0_design});
  CHECK(theta1 > lo);
  CHECK(theta1 < theta0_design);
  CHECK(std::abs(S(theta1, kDesign) - q) <= qst::kDefaultRootTol * q);

  const double theta2 = qst::solve_A(q, kDesign, {theta0_design, 2515.0 * pi / 5008.0});
  CHECK(theta2 > theta0_design);
  CHECK(std::abs(A(theta2, kDesign) - q) <= qst::kDefaultRootTol * q);
}

TEST_CASE("solvers recover a planted root", "[modes][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ks(3, 900);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = ks(rng);
    for (Parity parity : {Parity::symmetric, Parity::alternating}) {
      const auto intervals = qst::pole_free_intervals(parity, k, pi / 2, 3 * pi / 4);
      const auto& b = intervals[static_cast<std::size_t>(trial) % intervals.size()];
      const double star = b.lo + u(rng) * (b.hi - b.lo);
      const double q = qst::mode_function(parity, star, k);
      const double theta = parity == Parity::symmetric ? qst::solve_S(q, k, b) : qst::solve_A(q, k, b);
      // S and A are monotone here, so the root is unique
      const double slope = std::abs(qst::mode_function(parity, star * (1 + 1e-7), k) - q) / (star * 1e-7);
      CHECK_THAT(theta, WithinAbs(star, 1e-9 + 2e-10 * std::max(1.0, std::abs(q)) / slope));
    }
  }
}

TEST_CASE("solver error paths", "[modes]") {
  // no sign change: S - Q keeps one sign on a short pole-free piece
  const auto b = qst::pole_free_intervals(Parity::symmetric, 50, pi / 2, 3 * pi / 4)[1];
  const double q = S(b.lo + 0.5 * (b.hi - b.lo), 50);
  CHECK_THROWS_AS(qst::solve_S(q, 50, {b.lo, b.lo + 0.25 * (b.hi - b.lo)}), qst::NoSignChange);
  // bracket straddling a pole
  CHECK_THROWS_AS(qst::solve_S(1.0, 50, {b.lo, b.hi + 0.01}), qst::PoleInBracket);
  CHECK_THROWS_AS(qst::solve_A(1.0, 50, {pi / 2 - 0.001, pi / 2 + 0.001}), qst::PoleInBracket);
}

TEST_CASE("mode vectors have exact parity", "[modes][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.1, pi - 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 97;
    const double theta = th(rng);
    const auto sym = qst::mode_vector(theta, Parity::symmetric, k);
    const auto alt = qst::mode_vector(theta, Parity::alternating, k);
    CHECK(qst::reflect(sym.vector) == sym.vector);
    auto neg = alt.vector;
    for (double& x : neg) x = -x;
    CHECK(qst::reflect(alt.vector) == neg);
    CHECK_THAT(qst::detail::norm2(sym.vector), WithinAbs(1.0, 1e-14));
    CHECK_THAT(sym.mode.endpoint_weight, WithinAbs(sym.vector.front() * sym.vector.front(), 1e-14));
    CHECK(sym.mode.lambda == 2.0 * std::cos(theta));
    CHECK(sym.mode.endpoint_weight <= 0.5);
  }
}

TEST_CASE("mode_vector rejects vanishing lambda", "[modes]") {
  CHECK_THROWS_AS(qst::mode_vector(pi / 2, Parity::symmetric, 5), qst::DegenerateLambda);
}

TEST_CASE("odd chains carry an exact zero mode", "[modes]") {
  CHECK(qst::zero_mode_vector(5) == std::vector<double>{1 / std::sqrt(3.0), 0, -1 / std::sqrt(3.0), 0, 1 / std::sqrt(3.0)});
  CHECK_THROWS_AS(qst::zero_mode_vector(6), qst::InvalidSpec);
  for (int n : {5, 7, 31, 501})
    for (double q : {0.0, 3.0, 80.0}) {
      const auto h = qst::build_hamiltonian({n, q, 2});
      REQUIRE(qst::detail::residual_norm(h, qst::zero_mode_vector(n), 0.0) == 0.0);
      const auto ev = qst::endpoint_spectrum(h).eigenvalues;
      const auto idx = qst::zero_mode_index(ev, n);
      REQUIRE(idx);
      CHECK(std::abs(ev[*idx]) < 1e-12);
    }
  const std::vector<double> even{-1.0, 0.5, 2.0};
  CHECK(!qst::zero_mode_index(even, 6));
}

namespace {

/// Every root of S = Q or A = Q on (0, pi), by bracketing each pole-free piece.
std::vector<double> all_roots(Parity parity, double q, int k) {
  std::vector<double> out;
  for (const auto& b : qst::pole_free_intervals(parity, k, 1e-9, pi - 1e-9)) {
    // split further on a grid in case a piece is not monotone (theta < pi/2)
    constexpr int pieces = 64;
    for (int i = 0; i < pieces; ++i) {
      const double a = b.lo + (b.hi - b.lo) * i / pieces;
      const double c = b.lo + (b.hi - b.lo) * (i + 1) / pieces;
      try {
        out.push_back(qst::detail::solve_mode(parity, q, k, {a, c}, 1e-9));
      } catch (const qst::NoSignChange&) {
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("closed-form roots are eigenpairs of H", "[modes][oracle]") {
  const int n = 10;
  const double q = 5.0;
  const auto h = qst::build_hamiltonian({n, q, 2});
  const auto ev = oracle::eigenvalues(h);
  int found = 0;
  for (Parity parity : {Parity::symmetric, Parity::alternating})
    for (double theta : all_roots(parity, q, n - 3)) {
      const auto mv = qst::mode_vector(theta, parity, n - 3);
      CHECK(qst::detail::residual_norm(h, mv.vector, mv.mode.lambda) <= 1e-10 * q);
      CHECK(((ev.array() - mv.mode.lambda).abs() < 1e-9).any());
      ++found;
    }
  // every bulk eigenvalue is reached by exactly one closed form
  CHECK(found == n - 2);
}

TEST_CASE("every bulk eigenvalue solves its parity's equation", "[modes][property]") {
  for (int n : {6, 11, 30, 101})
    for (double q : {2.5, 5.0, 17.0, 80.0}) {
      const auto h = qst::build_hamiltonian({n, q, 2});
      const auto dec = qst::full_decomposition(h);
      const auto zero = qst::zero_mode_index(dec.eigenvalues, n);
      for (std::size_t j = 0; j < dec.size(); ++j) {
        const double lambda = dec.eigenvalues[j];
        if (std::abs(lambda) >= 2.0 || j == zero) continue;
        const double theta = std::acos(lambda / 2.0);
        const auto parity = dec.parities[j];
        const long double wide = qst::bulk_angle(h, dec.eigenvectors[j]);
        REQUIRE(std::abs(qst::mode_function(parity, wide, n - 3) - q) <= 1e-8 * q);
        const auto mv = qst::mode_vector(theta, parity, n - 3);
        REQUIRE(qst::detail::residual_norm(h, mv.vector, mv.mode.lambda) <= 1e-10 * q);
      }
    }
}

TEST_CASE("S - F and A - F decrease on pole-free pieces of (pi/2, 3pi/4)", "[modes][property]") {
  for (int k : {2, 5, 40, 498, 1252}) {
    for (Parity parity : {Parity::symmetric, Parity::alternating}) {
      for (const auto& b : qst::pole_free_intervals(parity, k, pi / 2, 3 * pi / 4)) {
        // stay clear of the poles where doubles saturate
        const double w = b.hi - b.lo;
        const double lo = b.lo + 1e-6 * w;
        const double hi = b.hi - 1e-6 * w;
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 1000; ++i) {
          const double x = lo + (hi - lo) * i / 999.0;
          const double g = qst::mode_function(parity, x, k) - F(x);
          REQUIRE(g < prev);
          prev = g;
        }
      }
    }
  }
}

TEST_CASE("F is decreasing and convex on (pi/2, pi)", "[modes][property]") {
  const double lo = pi / 2 + 1e-3;
  const double hi = pi - 1e-3;
  const double h = (hi - lo) / 1001.0;
  for (int i = 1; i <= 1000; ++i) {
    const double x = lo + h * i;
    REQUIRE(F(x + h) < F(x));
    REQUIRE(F(x + h) - 2 * F(x) + F(x - h) > 0.0);
  }
}

TEST_CASE("small |lambda| relative to cos(k theta/2) forces endpoint weight near 1/2", "[modes][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(pi / 2 + 1e-6, pi / 2 + 0.05);
  std::uniform_int_distribution<int> ks(2, 3000);
  int exercised = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const int k = ks(rng);
    const double theta = th(rng);
    const double lambda = 2.0 * std::cos(theta);
    for (Parity parity : {Parity::symmetric, Parity::alternating}) {
      const double factor = parity == Parity::symmetric ? std::cos(0.5 * k * theta) : std::sin(0.5 * k * theta);
      // smallest epsilon for which |lambda| <= sqrt(eps/(k+1)) |factor|
      const double eps = lambda * lambda * (k + 1) / (factor * factor);
      if (!(eps < 1.0)) continue;
      ++exercised;
      REQUIRE(qst::mode_vector(theta, parity, k).mode.endpoint_weight >= 0.5 - eps / 4.0 - 1e-14);
    }
  }
  CHECK(exercised > 100);
}
