#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stabledom/errors.hpp"
#include "stabledom/kernels.hpp"
#include "stabledom/truncation.hpp"

using namespace stabledom;

namespace {
// Closed form of int_{|h| > eps} |h|^{-alpha-d} dh.
double isotropic_rate(double alpha, int dim, double eps) {
  return unit_sphere_area(dim) * std::pow(eps, -alpha) / alpha;
}
}  // namespace

TEST_SUITE("truncation") {
  TEST_CASE("b_eps of isotropic kernels matches the closed form") {
    CHECK(rate_integral(isotropic(1.0, 1), 0.5, Point{}).value == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(rate_integral(isotropic(0.5, 1), 1.0, Point{}).value == doctest::Approx(4.0).epsilon(1e-6));
    for (double alpha : {0.5, 1.0, 1.5}) {
      for (int dim : {1, 2, 3}) {
        const auto est = rate_integral(isotropic(alpha, dim), 0.3, Point{0.1, 0.2, 0.0});
        CHECK(est.value == doctest::Approx(isotropic_rate(alpha, dim, 0.3)).epsilon(1e-6));
        CHECK(est.lower() <= isotropic_rate(alpha, dim, 0.3) * (1 + 1e-9));
        CHECK(est.upper() >= isotropic_rate(alpha, dim, 0.3) * (1 - 1e-9));
      }
    }
  }

  TEST_CASE("zero kernel has zero rate") {
    const auto z = scaled(isotropic(1.0, 1), 0.0);
    CHECK(rate_integral(z, 0.5, Point{}).value == 0.0);
  }

  TEST_CASE("context of a translation-invariant kernel uses b_eps exactly") {
    const auto ctx = make_context(isotropic(1.0, 1), 0.25);
    CHECK(ctx.b_bar() == ctx.b_eps(Point{}).value);
    CHECK(ctx.b_bar() == doctest::Approx(8.0).epsilon(1e-6));
    CHECK(ctx.b_eps(Point{17.0}).value == ctx.b_bar());
  }

  TEST_CASE("truncated_eval") {
    const auto ctx = make_context(isotropic(1.0, 1), 0.5);
    CHECK(ctx.truncated_eval(Point{0.0}, Point{0.4}) == 0.0);
    CHECK(ctx.truncated_eval(Point{0.0}, Point{0.5}) == 0.0);
    CHECK(ctx.truncated_eval(Point{0.0}, Point{1.0}) == 1.0);
    CHECK(ctx.truncated_eval(Point{0.0}, Point{0.0}) == 0.0);
    for (double r = 0.5000001; r < 50.0; r *= 1.7) {
      CHECK(ctx.truncated_eval(Point{0.3}, Point{0.3 + r}) <= 4.0);
    }
  }

  TEST_CASE("large eps drives the rate to zero") {
    double prev = rate_integral(isotropic(1.0, 1), 1.0, Point{}).value;
    for (double eps : {10.0, 100.0, 1000.0}) {
      const double v = rate_integral(isotropic(1.0, 1), eps, Point{}).value;
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-2);
  }

  TEST_CASE("stable_like rate bounds") {
    const auto k = stable_like(0.5, 1, 0.5, Point{1.0});
    const auto ctx = make_context(k, 1.0);
    // A eps^{-alpha} = 1.5 * 2 / 0.5 = 6 and a eps^{-alpha} = 2.
    CHECK(ctx.b_bar() <= 6.0 + 1e-12);
    CHECK(ctx.b_under() >= 2.0 - 1e-9);
    CHECK(ctx.b_under() <= ctx.b_bar());
    // At x = 0 the modulation vanishes so b_eps(0) equals the isotropic value 4.
    CHECK(ctx.b_eps(Point{0.0}).value == doctest::Approx(4.0).epsilon(1e-6));
  }

  TEST_CASE("rates are monotone in eps and respect the analytic bounds") {
    const auto k = stable_like(0.5, 1, 0.5, Point{1.0});
    double prev = 0.0;
    for (double eps : {1.0, 0.5, 0.25, 0.125}) {
      const auto ctx = make_context(k, eps);
      CHECK(ctx.b_bar() > prev);
      CHECK(ctx.b_bar() <= ctx.analytic_bound() * (1 + 1e-12));
      CHECK(ctx.b_under() * std::pow(eps, 0.5) >= k.a() * (1 - 1e-9));
      prev = ctx.b_bar();
    }
  }

  TEST_CASE("with_b_bar only raises the rate") {
    const auto ctx = make_context(isotropic(1.0, 1), 0.5);
    const auto up = ctx.with_b_bar(10.0);
    CHECK(up.b_bar() == 10.0);
    CHECK(up.b_eps(Point{}).value == ctx.b_eps(Point{}).value);
  }

  TEST_CASE("preconditions and quadrature failures") {
    CHECK_THROWS_AS(rate_integral(isotropic(1.0, 1), 0.0, Point{}), PreconditionError);
    CHECK_THROWS_AS(make_context(isotropic(1.0, 1), -1.0), PreconditionError);
    QuadratureSpec strict;
    strict.max_rel_error = 1e-300;
    CHECK_THROWS_AS(rate_integral(stable_like(0.5, 1, 0.5, Point{1.0}), 0.5, Point{0.3}, strict), QuadratureError);
  }
}
