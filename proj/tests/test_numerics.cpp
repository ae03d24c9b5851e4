#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "abreu/errors.hpp"
#include "abreu/numerics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace abreu;

TEST_CASE("adaptive quadrature on smooth integrands") {
  CHECK(integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(integrate_adaptive([](double x) { return std::sin(x); }, 0.0,
                           std::acos(-1.0)) ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(integrate_adaptive([](double) { return 1.0; }, 3.0, 3.0) == 0.0);
}

TEST_CASE("adaptive quadrature reports unreachable tolerance") {
  QuadratureSpec strict;
  strict.abs_tol = 1e-30;
  strict.rel_tol = 1e-30;
  strict.max_depth = 3;
  auto kink = [](double x) { return std::sqrt(std::fabs(x - 0.3)); };
  CHECK_THROWS_AS(integrate_adaptive(kink, 0.0, 1.0, strict),
                  QuadratureFailure);
}

TEST_CASE("exponential kernel integral against closed form and slow oracle") {
  const double got = integrate_kernel(1, 2.0, 2.0, 0.0, 1.0);
  CHECK(got == doctest::Approx(std::expm1(0.5)).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.6487212707001281).epsilon(1e-12));
  CHECK(std::fabs(got - midpoint_kernel(1, 2.0, 2.0, 0.0, 1.0)) < 5e-10);

  CHECK(integrate_kernel(-1, 3.0, 1.5, 2.0, 2.0) == 0.0);

  // m = p and f = -1 turn the integrand into a pure e^{-u} after
  // substitution, so the improper integral is exactly 1.
  CHECK(std::fabs(integrate_kernel(-1, 2.0, 2.0, 0.0, 12.0) - 1.0) < 1e-6);
  for (double p : {1.5, 2.0, 3.0})
    CHECK(std::fabs(integrate_kernel(-1, p, p, 0.0, 20.0) - 1.0) < 1e-8);
}

TEST_CASE("kernel integral input validation") {
  CHECK_THROWS_AS(integrate_kernel(0, 2.0, 2.0, 0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(integrate_kernel(1, 1.0, 2.0, 0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(integrate_kernel(1, 2.0, 0.5, 0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(integrate_kernel(1, 2.0, 2.0, -1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(integrate_kernel(1, 2.0, 2.0, 2.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(
      integrate_kernel(1, 2.0, 2.0, 0.0,
                       std::numeric_limits<double>::infinity()),
      InvalidInput);
}

TEST_CASE("kernel integral additivity over split intervals") {
  std::mt19937 rng(20240811);
  std::uniform_real_distribution<double> pt(0.0, 5.0);
  std::uniform_real_distribution<double> pd(1.5, 4.0);
  std::uniform_real_distribution<double> md(1.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    double a = pt(rng), b = pt(rng), c = pt(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double p = pd(rng);
    const double m = md(rng);
    const int f = (trial % 2 == 0) ? 1 : -1;
    const double whole = integrate_kernel(f, p, m, a, c);
    const double split =
        integrate_kernel(f, p, m, a, b) + integrate_kernel(f, p, m, b, c);
    CHECK(std::fabs(whole - split) <= 4e-12 * std::max(1.0, std::fabs(whole)));
  }
}

TEST_CASE("bracketed root finding") {
  CHECK(find_root_bracketed([](double t) { return t - 1.0; }, {0.0, 2.0}) ==
        doctest::Approx(1.0).epsilon(1e-13));

  // Boundary-slope equation for the disk case whose answer is known in
  // closed form: e^{t^2/2} - 1 = e^{t^2/2}/2 at t = sqrt(2 ln 2).
  auto gap = [](double t) {
    return std::expm1(t * t / 2.0) - std::exp(t * t / 2.0) / 2.0;
  };
  CHECK(find_root_bracketed(gap, {0.5, 2.0}) ==
        doctest::Approx(1.1774100225154747).epsilon(1e-12));

  CHECK_THROWS_AS(
      find_root_bracketed([](double t) { return t * t + 1.0; }, {0.0, 2.0}),
      NoBracket);

  // Exact zero at an endpoint is accepted without iteration.
  CHECK(find_root_bracketed([](double t) { return t; }, {0.0, 2.0}) == 0.0);
}

TEST_CASE("root finding is deterministic") {
  auto fn = [](double t) { return std::cos(t) - t; };
  const double r1 = find_root_bracketed(fn, {0.0, 1.0});
  const double r2 = find_root_bracketed(fn, {0.0, 1.0});
  CHECK(r1 == r2);
}

TEST_CASE("monotone inversion") {
  CHECK(invert_monotone([](double t) { return t * t * t; }, 8.0, {0.0, 3.0}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(invert_monotone([](double t) { return std::expm1(t * t / 2.0); }, 1.0,
                        {0.0, 3.0}) ==
        doctest::Approx(1.1774100225154747).epsilon(1e-12));
  CHECK_THROWS_AS(
      invert_monotone([](double t) { return t; }, 5.0, {0.0, 1.0}),
      InvalidInput);
}

TEST_CASE("inversion agrees with direct root finding on monotone cubics") {
  std::mt19937 rng(77013);
  std::uniform_real_distribution<double> coef(0.1, 2.0);
  std::uniform_real_distribution<double> at(-1.8, 1.8);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = coef(rng), b = coef(rng), c = at(rng);
    auto fn = [&](double t) { return a * t * t * t + b * t + c; };
    const double target = fn(at(rng));
    const double via_invert = invert_monotone(fn, target, {-2.0, 2.0});
    const double via_root = find_root_bracketed(
        [&](double t) { return fn(t) - target; }, {-2.0, 2.0});
    CHECK(std::fabs(via_invert - via_root) < 1e-10);
  }
}
