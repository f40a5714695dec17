#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "nlborn/bounds.hpp"
#include "nlborn/compositions.hpp"
#include "nlborn/errors.hpp"

using namespace nlborn;

namespace {

// Direct evaluation of the nu recursion by enumerating compositions.
std::vector<double> nu_brute(double nu0, const std::vector<int>& degrees, int n_max) {
  std::vector<double> nu{nu0};
  for (int n = 0; n < n_max; ++n) {
    double s = 0.0;
    for (int l : degrees) {
      for_each_composition(n, l, 0, [&](const std::vector<int>& parts) {
        double p = 1.0;
        for (int i : parts) p *= nu[static_cast<std::size_t>(i)];
        s += p;
      });
    }
    nu.push_back(s);
  }
  return nu;
}

}  // namespace

TEST_CASE("compositions") {
  int count = 0;
  std::vector<std::vector<int>> seen;
  for_each_composition(4, 2, 1, [&](const std::vector<int>& p) {
    ++count;
    seen.push_back(p);
  });
  CHECK(count == 3);
  CHECK(seen.front() == std::vector<int>{1, 3});
  CHECK(seen.back() == std::vector<int>{3, 1});
  count = 0;
  for_each_composition(3, 3, 0, [&](const std::vector<int>&) { ++count; });
  CHECK(count == 10);  // C(5, 2)
  count = 0;
  for_each_composition(2, 3, 1, [&](const std::vector<int>&) { ++count; });
  CHECK(count == 0);
}

TEST_CASE("nu sequence: exact integer values") {
  const std::vector<double> cubic = nu_sequence(1.0, {3}, 6);
  const std::vector<double> ternary = {1, 1, 3, 12, 55, 273, 1428};
  for (std::size_t i = 0; i < ternary.size(); ++i) CHECK(cubic[i] == ternary[i]);

  const std::vector<double> quad = nu_sequence(1.0, {2}, 7);
  const std::vector<double> catalan = {1, 1, 2, 5, 14, 42, 132, 429};
  for (std::size_t i = 0; i < catalan.size(); ++i) CHECK(quad[i] == catalan[i]);

  CHECK(nu_sequence(1.0, {2, 3}, 1)[1] == 2.0);
}

TEST_CASE("nu sequence matches the brute-force recursion") {
  for (const std::vector<int>& deg :
       {std::vector<int>{3}, std::vector<int>{2, 3}, std::vector<int>{2, 5}, std::vector<int>{4}}) {
    for (double nu0 : {0.3, 1.0, 1.7}) {
      const auto fast = nu_sequence(nu0, deg, 12);
      const auto slow = nu_brute(nu0, deg, 12);
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("nu sequence homogeneity for a single degree") {
  for (int l : {2, 3, 4}) {
    const auto one = nu_sequence(1.0, {l}, 10);
    const double nu0 = 0.63;
    const auto s = nu_sequence(nu0, {l}, 10);
    for (int n = 0; n <= 10; ++n) {
      CHECK(s[n] == doctest::Approx(one[n] * std::pow(nu0, (l - 1) * n + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("nu sequence validation and overflow") {
  CHECK_THROWS_AS(nu_sequence(-1.0, {3}, 3), ParameterError);
  CHECK_THROWS_AS(nu_sequence(NAN, {3}, 3), ParameterError);
  CHECK_THROWS_AS(nu_sequence(1.0, {3}, -1), ParameterError);
  CHECK_THROWS_AS(nu_sequence(1.0, {1}, 3), ParameterError);
  CHECK(nu_sequence(0.0, {3}, 5)[5] == 0.0);
  try {
    (void)nu_sequence(1e30, {3}, 40);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("overflow at order") != std::string::npos);
  }
}

TEST_CASE("series constants") {
  const SeriesConstants c = cubic_constants(0.8);
  CHECK(c.nu == doctest::Approx(1.2));
  CHECK(c.K == doctest::Approx(6.75 * 0.64));
  const SeriesConstants g = general_constants(0.8, {3});
  CHECK(g.nu == c.nu);
  CHECK(g.K == c.K);
  CHECK(general_constants(0.8, {2, 3}).K == doctest::Approx(2.0 * (1.44 + 1.728) / 0.8).epsilon(1e-14));
  // Adding a quadratic term does not move nu, only K.
  const SeriesConstants g23 = general_constants(0.8, {2, 3});
  CHECK(g23.nu == g.nu);
  CHECK(g23.K > g.K);
  const SeriesConstants full = general_constants(0.8, {3}, QPolynomial::FullRange);
  CHECK(full.K == doctest::Approx(g23.K).epsilon(1e-15));
  const SeriesConstants z = general_constants(0.0, {2, 3});
  CHECK(z.nu == 0.0);
  CHECK(z.K == 0.0);
  CHECK(q_polynomial(2.0, {2, 4}) == 20.0);
  CHECK(q_polynomial(2.0, {4}, QPolynomial::FullRange) == 28.0);
}

TEST_CASE("nu_n <= nu K^n for random nu0") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> log_nu0(std::log(1e-3), std::log(1e2));
  const std::vector<std::vector<int>> degree_sets = {{3}, {2}, {2, 3}, {2, 5}, {4}, {2, 3, 4}};
  for (int trial = 0; trial < 50; ++trial) {
    const double nu0 = std::exp(log_nu0(rng));
    for (const auto& deg : degree_sets) {
      for (QPolynomial q : {QPolynomial::PresentDegrees, QPolynomial::FullRange}) {
        const SeriesConstants c = general_constants(nu0, deg, q);
        std::vector<double> seq;
        try {
          seq = nu_sequence(nu0, deg, 30);
        } catch (const Error&) {
          continue;  // overflow for the largest nu0; the shorter prefix is covered below
        }
        double worst = 0.0;
        CHECK_NOTHROW(worst = nu_bound_check(seq, c.nu, c.K));
        CHECK(worst <= 1.0);
      }
    }
  }
}

TEST_CASE("nu_bound_check flags violations") {
  const std::vector<double> seq = {1.0, 10.0};
  CHECK_THROWS_AS(nu_bound_check(seq, 1.0, 1.0), BoundViolationError);
  CHECK(nu_bound_check(seq, 1.0, 10.0) == 1.0);
  CHECK(nu_bound_check(seq, 0.0, 0.0) == 0.0);
}

TEST_CASE("generating function identity") {
  for (double nu0 : {0.2, 0.5, 1.0}) {
    const auto seq = nu_sequence(nu0, {3}, 40);
    const SeriesConstants c = cubic_constants(nu0);
    const double x = 0.3 / c.K;
    const GeneratingFunctionCheck gf = generating_function_residual(seq, x, {3});
    CHECK(gf.inside_radius);
    CHECK(std::fabs(gf.residual) <= 1e-12 * gf.partial_sum);
  }
  const auto seq = nu_sequence(0.5, {3}, 40);
  const GeneratingFunctionCheck at01 = generating_function_residual(seq, 0.1, {3});
  CHECK(std::fabs(at01.residual) <= 1e-14);
  CHECK(at01.partial_sum > 0.5);

  const auto seq23 = nu_sequence(0.4, {2, 3}, 40);
  const GeneratingFunctionCheck g23 =
      generating_function_residual(seq23, 0.4 / general_constants(0.4, {2, 3}).K, {2, 3});
  CHECK(std::fabs(g23.residual) <= 1e-10 * g23.partial_sum);

  const auto big = nu_sequence(2.0, {3}, 10);
  CHECK_FALSE(generating_function_residual(big, 1.0, {3}).inside_radius);
  CHECK_THROWS_AS(generating_function_residual({}, 0.1, {3}), ParameterError);
  CHECK_THROWS_AS(generating_function_residual(seq, -0.1, {3}), ParameterError);
}

TEST_CASE("inverse radius") {
  const double mu = 1.1, nu0 = 0.7;
  const SeriesConstants c = cubic_constants(nu0);
  SUBCASE("small coupling clamps C to 2") {
    const InverseRadius ir = inverse_radius(mu, nu0, 1e-3);
    CHECK(ir.C == 2.0);
    CHECK(ir.coupling == doctest::Approx(1e-3 * c.nu * c.K * mu));
  }
  SUBCASE("matches the direct formula and the cubic closed form") {
    for (double k1 : {0.01, 1.0, 30.0, 1e4}) {
      const InverseRadius ir = inverse_radius(mu, nu0, k1);
      const double direct = (std::sqrt(16 * ir.C * ir.C + 1) - 4 * ir.C) / (2 * c.K * mu);
      CHECK(ir.r == doctest::Approx(direct).epsilon(1e-9));
      const double C3 = std::max(2.0, 81.0 / 8.0 * mu * k1 * std::pow(nu0, 3));
      CHECK(ir.C == doctest::Approx(C3).epsilon(1e-14));
      const double closed = 2.0 / (27.0 * mu * nu0 * nu0) * (std::sqrt(16 * C3 * C3 + 1) - 4 * C3);
      CHECK(ir.r == doctest::Approx(closed).epsilon(1e-9));
      CHECK(ir.r > 0.0);
      CHECK(ir.r < 1.0 / (16.0 * ir.C * c.K * mu));
    }
  }
  SUBCASE("no cancellation for huge C") {
    const InverseRadius ir = inverse_radius(mu, nu0, 1e12);
    CHECK(ir.r == doctest::Approx(1.0 / (16.0 * ir.C * c.K * mu)).epsilon(1e-9));
  }
  SUBCASE("monotone in ||K1^+||") {
    double prev = INFINITY;
    for (double k1 : {1.0, 10.0, 100.0}) {
      const double r = inverse_radius(mu, nu0, k1).r;
      CHECK(r <= prev);
      prev = r;
    }
  }
  CHECK_THROWS_AS(inverse_radius(0.0, nu0, 1.0), ParameterError);
  CHECK_THROWS_AS(inverse_radius(mu, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(inverse_radius(mu, nu0, -1.0), ParameterError);
}

TEST_CASE("scaling laws of the constants under g0 -> gamma g0") {
  // nu0 scales with gamma, K1 with gamma^3, mu not at all.
  const double mu = 1.3, nu0 = 0.9, k1 = 4.0;
  const InverseRadius base = inverse_radius(mu, nu0, k1);
  for (double gamma : {0.5, 0.1, 0.01}) {
    const InverseRadius s = inverse_radius(mu, gamma * nu0, k1 / std::pow(gamma, 3));
    CHECK(s.coupling == doctest::Approx(base.coupling).epsilon(1e-12));
    CHECK(s.C == doctest::Approx(base.C).epsilon(1e-12));
    CHECK(s.r * gamma * gamma == doctest::Approx(base.r).epsilon(1e-12));
  }
}

TEST_CASE("error bound") {
  const double mu = 1.0, nu0 = 0.5, k1 = 3.0;
  const SeriesConstants c = cubic_constants(nu0);
  const double a = k1 * c.nu * c.K * mu;
  const ErrorBound at0 = error_bound(mu, nu0, k1, 0.0, 2.0);
  CHECK(at0.hypothesis_holds);
  CHECK(at0.threshold == doctest::Approx((1 - std::sqrt(a / (1 + a))) / (c.K * mu)));
  CHECK(at0.prefactor == doctest::Approx(1.0));
  CHECK(at0.bound == doctest::Approx(2.0));

  // The hypothesis is exactly M < threshold; the prefactor grows towards it.
  double prev = 0.0;
  for (double f : {0.1, 0.5, 0.9, 0.99}) {
    const ErrorBound e = error_bound(mu, nu0, k1, f * at0.threshold, 1.0);
    CHECK(e.hypothesis_holds);
    CHECK(e.prefactor > prev);
    CHECK(e.margin == doctest::Approx((1 - f) * at0.threshold));
    prev = e.prefactor;
  }
  const ErrorBound over = error_bound(mu, nu0, k1, 1.01 * at0.threshold, 1.0);
  CHECK_FALSE(over.hypothesis_holds);
  CHECK(over.margin < 0.0);
  CHECK(over.bound == 0.0);

  const ErrorBound free = error_bound(mu, nu0, 0.0, 0.0, 1.0);
  CHECK(free.threshold == doctest::Approx(1.0 / (c.K * mu)));
  CHECK_THROWS_AS(error_bound(mu, nu0, k1, -1.0, 1.0), ParameterError);
}

TEST_CASE("bounds report") {
  const BoundsReport rep = make_bounds_report({{1.0, 1.2}, {2.0, 9.9}}, 0.4, 12.0, {3});
  CHECK(rep.mu == 9.9);
  CHECK(rep.L == 3);
  const SeriesConstants c = cubic_constants(0.4);
  CHECK(rep.nu == doctest::Approx(c.nu));
  CHECK(rep.K == doctest::Approx(c.K));
  CHECK(rep.forward_radius == doctest::Approx(1.0 / (c.K * 9.9)));
  const InverseRadius ir = inverse_radius(9.9, 0.4, 12.0);
  CHECK(rep.r == ir.r);
  CHECK(rep.C == ir.C);
  CHECK(rep.M_threshold == error_bound(9.9, 0.4, 12.0, 0.0, 0.0).threshold);
  CHECK_FALSE(rep.M.has_value());

  const BoundsReport zero = make_bounds_report({{1.0, 1.0}}, 0.0, 1.0, {3});
  CHECK(std::isinf(zero.forward_radius));
  CHECK(std::isinf(zero.r));

  // Quadratic plus cubic at the same nu0 is strictly more restrictive.
  const BoundsReport both = make_bounds_report({{1.0, 1.2}}, 0.4, 12.0, {2, 3});
  const BoundsReport cubic = make_bounds_report({{1.0, 1.2}}, 0.4, 12.0, {3});
  CHECK(both.forward_radius < cubic.forward_radius);
}
