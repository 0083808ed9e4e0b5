#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stabledom/errors.hpp"
#include "stabledom/semigroup.hpp"

using namespace stabledom;

TEST_SUITE("reference") {
  TEST_CASE("stable constants") {
    CHECK(stable_constant(1.0, 1) == doctest::Approx(std::numbers::pi).epsilon(1e-9));
    for (double alpha : {0.5, 1.5}) {
      // int (1 - cos h) |h|^{-1-alpha} dh = 2 Gamma(1-alpha) cos(pi alpha/2) / alpha.
      const double closed = 2.0 * std::tgamma(1.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0) / alpha;
      CHECK(stable_constant(alpha, 1) == doctest::Approx(closed).epsilon(1e-9));
    }
    CHECK(stable_constant(1.0, 2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-9));
  }

  TEST_CASE("Cauchy densities") {
    CHECK(reference_density(1.0, 1, 1.0, Point{0.0}) == doctest::Approx(1.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-8));
    for (double t : {0.1, 1.0, 3.0}) {
      for (double x : {0.0, 0.5, 2.0, 30.0}) {
        const double s = std::numbers::pi * t;
        const double cauchy = s / (std::numbers::pi * (s * s + x * x));
        CHECK(reference_density(1.0, 1, t, Point{x}) == doctest::Approx(cauchy).epsilon(1e-7));
      }
    }
    // d = 2: symbol 2 pi |xi|, density c t / (2 pi (c^2 t^2 + r^2)^{3/2}).
    const double c = 2.0 * std::numbers::pi;
    for (double r : {0.0, 1.0, 4.0}) {
      const double exact = c / (2.0 * std::numbers::pi * std::pow(c * c + r * r, 1.5));
      CHECK(reference_density(1.0, 2, 1.0, Point{r, 0.0}) == doctest::Approx(exact).epsilon(1e-7));
    }
  }

  TEST_CASE("symmetry and scaling") {
    for (double alpha : {0.5, 1.5}) {
      for (int dim : {1, 2}) {
        const Point x = dim == 1 ? Point{0.8} : Point{0.6, -0.5};
        const Point mx = -1.0 * x;
        CHECK(reference_density(alpha, dim, 0.7, x) == doctest::Approx(reference_density(alpha, dim, 0.7, mx)).epsilon(1e-12));
        for (double t : {0.25, 2.0}) {
          const double direct = reference_density(alpha, dim, t, x);
          const double scaled = std::pow(t, -dim / alpha) *
                                reference_density(alpha, dim, 1.0, std::pow(t, -1.0 / alpha) * x);
          CHECK(direct == doctest::Approx(scaled).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("unimodal in |x|") {
    double prev = reference_density(1.5, 1, 1.0, Point{0.0});
    for (double x = 0.25; x < 20.0; x *= 1.5) {
      const double v = reference_density(1.5, 1, 1.0, Point{x});
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("preconditions") {
    CHECK_THROWS_AS(reference_density(1.0, 3, 1.0, Point{}), PreconditionError);
    CHECK_THROWS_AS(reference_density(1.0, 1, 0.0, Point{}), PreconditionError);
  }
}
