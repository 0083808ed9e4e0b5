#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "stabledom/errors.hpp"
#include "stabledom/kernels.hpp"
#include "stabledom/lattice.hpp"
#include "stabledom/semigroup.hpp"

using namespace stabledom;

namespace {

// A_eps phi(0) for phi(h) = exp(-h^2/2) and f = |h|^{-2} in d = 1, integrated by parts:
// 2 int_eps^inf (e^{-h^2/2} - 1) h^{-2} dh = 2 [(e^{-eps^2/2} - 1)/eps - sqrt(pi/2) erfc(eps/sqrt 2)].
double cauchy_gaussian_generator(double eps) {
  return 2.0 * ((std::exp(-0.5 * eps * eps) - 1.0) / eps -
                std::sqrt(std::numbers::pi / 2.0) * std::erfc(eps / std::numbers::sqrt2));
}

struct Fixture {
  TruncationContext ctx = make_context(isotropic(1.0, 1), 0.5);
  Lattice lat{1, 40.0, 1024};
  DiscreteKernel dk = discretize_kernel(ctx, lat);
};

Field indicator(const Lattice& lat, double lo, double hi) {
  return Field::sample(lat, [lo, hi](const Point& p) { return p[0] >= lo && p[0] <= hi ? 1.0 : 0.0; });
}

}  // namespace

TEST_SUITE("semigroup") {
  TEST_CASE("poisson window") {
    const auto w = poisson_window(5.0, 1e-12, 1000);
    double sum = 0.0;
    for (std::size_t n = w.first; n <= w.last; ++n) {
      const double direct = std::exp(-5.0 + n * std::log(5.0) - std::lgamma(n + 1.0));
      CHECK(w.weight(n) == doctest::Approx(direct).epsilon(1e-12));
      sum += w.weight(n);
    }
    CHECK(w.tail <= 1e-12);
    CHECK(sum == doctest::Approx(1.0 - w.tail).epsilon(1e-13));
    const auto big = poisson_window(1e4, 1e-10, 100000);
    CHECK(big.first > 9000);
    CHECK(big.last < 11000);
    const auto zero = poisson_window(0.0, 1e-10, 10);
    CHECK(zero.first == 0);
    CHECK(zero.weight(0) == 1.0);
    CHECK_THROWS_AS(poisson_window(1e6, 1e-10, 100), SeriesTruncationError);
  }

  TEST_CASE("gamma of constants and of zero") {
    Fixture fx;
    const auto one = apply_gamma(fx.dk, Field(fx.lat, 1.0));
    for (std::size_t i = 0; i < fx.lat.size(); ++i) CHECK(one[i] == doctest::Approx(fx.dk.b_bar()).epsilon(1e-12));
    const auto zero = apply_gamma(fx.dk, Field(fx.lat, 0.0));
    CHECK(zero.sup_norm() == 0.0);
    const auto gen = apply_generator(fx.dk, Field(fx.lat, 1.0));
    CHECK(gen.sup_norm() <= 1e-12 * fx.dk.b_bar());
  }

  TEST_CASE("gamma of a far indicator is the direct sum") {
    Fixture fx;
    const auto phi = indicator(fx.lat, 5.0, 6.0);
    const auto g = apply_gamma(fx.dk, phi);
    const std::size_t x = fx.lat.center();
    double direct = 0.0;
    for (std::size_t j = 0; j < fx.lat.size(); ++j) {
      if (phi[j] > 0.0) direct += fx.ctx.truncated_eval(fx.lat.point(x), fx.lat.point(j)) * fx.lat.weight();
    }
    CHECK(g[x] == doctest::Approx(direct).epsilon(1e-4));
  }

  TEST_CASE("generator bounds and maximum principle") {
    Fixture fx;
    const Bump b = Bump::gaussian(Point{0.3}, 1.0);
    const auto phi = Field::sample(fx.lat, [&](const Point& p) { return b.value(p); });
    const auto gen = apply_generator(fx.dk, phi);
    CHECK(gen.sup_norm() <= 2.0 * phi.sup_norm() * fx.dk.b_bar());
    const auto peak = static_cast<std::size_t>(std::max_element(phi.values().begin(), phi.values().end()) -
                                               phi.values().begin());
    CHECK(gen[peak] <= 0.0);
  }

  TEST_CASE("generator at the bump peak matches the closed form") {
    const auto ctx = make_context(isotropic(1.0, 1), 0.5);
    const Lattice lat(1, 10.0, 2047);
    const auto dk = discretize_kernel(ctx, lat);
    const std::size_t c = lat.center();
    REQUIRE(lat.point(c)[0] == 0.0);
    const Bump b = Bump::gaussian();
    const auto phi = Field::sample(lat, [&](const Point& p) { return b.value(p); });
    const auto gen = apply_generator(dk, phi, BoundaryMode::absorbing);
    CHECK(gen[c] == doctest::Approx(cauchy_gaussian_generator(0.5)).epsilon(1e-4));
  }

  TEST_CASE("semigroup at t = 0 and for constants") {
    Fixture fx;
    const auto phi = indicator(fx.lat, -0.5, 0.5);
    const auto e0 = apply_semigroup(fx.dk, phi, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) CHECK(e0.result[i] == phi[i]);
    for (double t : {0.1, 1.0, 2.0}) {
      const auto e1 = apply_semigroup(fx.dk, Field(fx.lat, 1.0), t);
      for (std::size_t i = 0; i < fx.lat.size(); ++i) CHECK(e1.result[i] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(e1.tail <= 1e-10);
    }
  }

  TEST_CASE("small t agrees with the first-order expansion") {
    Fixture fx;
    const Bump b = Bump::gaussian(Point{}, 1.0);
    const auto phi = Field::sample(fx.lat, [&](const Point& p) { return b.value(p); });
    const double t = 1e-3 / fx.dk.b_bar();
    const auto e = apply_semigroup(fx.dk, phi, t);
    const auto gen = apply_generator(fx.dk, phi);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) worst = std::max(worst, std::abs(e.result[i] - phi[i] - t * gen[i]));
    const double tb = t * fx.dk.b_bar();
    CHECK(worst <= 2.0 * tb * tb * phi.sup_norm());
  }

  TEST_CASE("positivity, contraction and the semigroup law") {
    Fixture fx;
    const auto phi = indicator(fx.lat, 1.0, 2.0);
    const auto e = apply_semigroup(fx.dk, phi, 1.0);
    for (double v : e.result.values()) CHECK(v >= 0.0);
    CHECK(e.result.sup_norm() <= 1.0 + 1e-12);
    const auto es = apply_semigroup(fx.dk, phi, 0.3);
    const auto ets = apply_semigroup(fx.dk, es.result, 0.7);
    CHECK(sup_distance(ets.result, e.result) <= 1e-4);
  }

  TEST_CASE("uniformization invariance") {
    Fixture fx;
    const auto phi = indicator(fx.lat, -1.0, 0.5);
    SeriesOptions lazy;
    lazy.b_bar = 1.5 * fx.dk.b_bar();
    for (BoundaryMode mode : {BoundaryMode::lumped, BoundaryMode::absorbing}) {
      SeriesOptions base;
      base.mode = mode;
      lazy.mode = mode;
      const auto a = apply_semigroup(fx.dk, phi, 0.8, base);
      const auto b = apply_semigroup(fx.dk, phi, 0.8, lazy);
      CHECK(b.b_bar == doctest::Approx(1.5 * fx.dk.b_bar()));
      CHECK(sup_distance(a.result, b.result) < 1e-8);
    }
  }

  TEST_CASE("several horizons share iterates") {
    Fixture fx;
    const auto phi = indicator(fx.lat, -0.5, 0.5);
    const std::vector<double> times = {0.1, 0.5, 1.0};
    const auto all = apply_semigroup(fx.dk, phi, times);
    REQUIRE(all.size() == 3);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto one = apply_semigroup(fx.dk, phi, times[k]);
      CHECK(sup_distance(all[k].result, one.result) <= 1e-14);
    }
  }

  TEST_CASE("powers of P match the iterated kernels") {
    const auto ctx = make_context(stable_like(0.5, 1, 0.5, Point{1.0}), 0.5);
    const Lattice lat(1, 10.0, 256);
    const auto dk = discretize_kernel(ctx, lat);
    const std::size_t src = lat.nearest(Point{0.7});
    const auto phi = Field::sample(lat, [](const Point& p) { return 1.0 / (1.0 + p[0] * p[0]); });
    const auto it = iterate_kernels(dk, src, 5);
    Field power = phi;
    for (int n = 1; n <= 5; ++n) {
      power = apply_gamma(dk, power, BoundaryMode::absorbing);
      for (double& v : power.values()) v /= dk.b_bar();
      const auto& g = it[n - 1];
      double expected = g.atom_weight * phi[src];
      for (std::size_t j = 0; j < lat.size(); ++j) expected += g.mass[j] * phi[j];
      CHECK(power[src] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("truncated and limit generator quadrature") {
    const auto k = isotropic(1.0, 1);
    const Bump b = Bump::gaussian();
    for (double eps : {1.0, 0.5, 0.1, 0.01}) {
      CHECK(truncated_generator(k, b, Point{}, eps) == doctest::Approx(cauchy_gaussian_generator(eps)).epsilon(1e-8));
    }
    CHECK(limit_generator(k, b, Point{}) == doctest::Approx(-std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-8));
  }

  TEST_CASE("limit generator sweep") {
    const auto k = isotropic(1.0, 1);
    const Bump b = Bump::gaussian();
    const std::vector<Point> pts = {Point{0.0}, Point{0.7}, Point{-1.5}};
    const std::vector<double> eps = {0.4, 0.2, 0.1, 0.05, 0.025};
    const auto res = apply_limit_generator(k, b, pts, eps);
    for (const auto& row : res.approx) CHECK(row[0] < 0.0);
    CHECK(res.expected_slope == 1.0);
    CHECK(res.slope == doctest::Approx(1.0).epsilon(0.3));
    const auto flat = apply_limit_generator(k, Bump::constant(2.0), pts, eps);
    for (const auto& row : flat.approx) {
      for (double v : row) CHECK(v == 0.0);
    }
    const std::vector<double> short_sweep = {0.4, 0.2, 0.1};
    CHECK_THROWS_AS(apply_limit_generator(k, b, pts, short_sweep), PreconditionError);
  }

  TEST_CASE("limit generator for a kernel without h-symmetry") {
    const auto k = stable_like(0.5, 1, 0.5, Point{1.0});
    const Bump b = Bump::gaussian(Point{0.4});
    const std::vector<Point> pts = {Point{0.0}, Point{1.0}};
    const std::vector<double> eps = {0.4, 0.2, 0.1, 0.05, 0.025};
    const auto res = apply_limit_generator(k, b, pts, eps);
    CHECK(res.expected_slope == doctest::Approx(0.5));
    CHECK(res.slope >= 0.5 - 0.3);
  }
}
