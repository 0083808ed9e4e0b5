#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "stabledom/errors.hpp"
#include "stabledom/kernels.hpp"
#include "stabledom/lattice.hpp"
#include "stabledom/semigroup.hpp"
#include "stabledom/verifier.hpp"

using namespace stabledom;

namespace {

// Direct scan: largest m <= limit violating (1 - ratio)^m (m+1)^q < 1/(m+1), plus one.
int scan_n0(double ratio, double q, int limit = 5000) {
  int last_fail = 0;
  for (int m = 1; m <= limit; ++m) {
    if (!(std::pow(1.0 - ratio, m) * std::pow(m + 1.0, q) < 1.0 / (m + 1.0))) last_fail = m;
  }
  return last_fail + 1;
}

}  // namespace

TEST_SUITE("verifier") {
  TEST_CASE("subharmonic integral vanishes as kappa shrinks") {
    const auto k = isotropic(1.0, 1);
    const SubharmonicitySample s{Point{0.0}, Point{1.0}, 0.25};
    CHECK(subharmonic_integral(k, s, 1e-9) == 0.0);  // ball inside the eps-hole
    const double small = subharmonic_integral(k, s, 0.3);
    const double large = subharmonic_integral(k, s, 0.6);
    CHECK(small > 0.0);
    CHECK(large > small);
  }

  TEST_CASE("subharmonic integral against a direct oracle") {
    // d = 1, x = 0, y = 1, eps = 0.1, kappa = 0.5: int over 0.5 < z < 1.5, |z - 1| > 0.1 of z^{-2} |z - 1|^{-2}.
    const auto k = isotropic(1.0, 1);
    const SubharmonicitySample s{Point{0.0}, Point{1.0}, 0.1};
    // z^{-2} (z - 1)^{-2} = 2/z + 1/z^2 - 2/(z - 1) + 1/(z - 1)^2.
    auto F = [](double z) { return -1.0 / z - 1.0 / (z - 1.0) + 2.0 * std::log(std::abs(z)) - 2.0 * std::log(std::abs(z - 1.0)); };
    const double exact = (F(0.9) - F(0.5)) + (F(1.5) - F(1.1));
    CHECK(subharmonic_integral(k, s, 0.5) == doctest::Approx(exact).epsilon(1e-9));
  }

  TEST_CASE("coincident subharmonicity samples are rejected") {
    const std::vector<SubharmonicitySample> bad = {{Point{0.5}, Point{0.5}, 0.5}};
    CHECK_THROWS_AS(check_subharmonicity(isotropic(1.0, 1), bad), PreconditionError);
  }

  TEST_CASE("isotropic kernel certifies kappa >= 0.05") {
    const std::vector<double> eps = {1.0, 0.5, 0.25};
    const auto samples = default_subharmonicity_samples(1, 50, eps);
    REQUIRE(samples.size() == 50);
    for (const auto& s : samples) CHECK(distance(s.x, s.y) >= 0.05);
    const auto res = check_subharmonicity(isotropic(1.0, 1), samples);
    CHECK(res.report.pass);
    CHECK(res.kappa >= 0.05);
  }

  TEST_CASE("Estimate 3 side condition") {
    // The scan gives 6 for a/A = 0.5, d/alpha = 1: (m+1)^2 < 2^m first holds for good at m = 6.
    CHECK(scan_n0(0.5, 1.0) == 6);
    CHECK(estimate3_n0(0.5, 1.0) == scan_n0(0.5, 1.0));
    for (double ratio : {0.1, 0.3, 0.9}) {
      for (double q : {0.5, 1.0, 2.0, 4.0}) CHECK(estimate3_n0(ratio, q) == scan_n0(ratio, q));
    }
    CHECK(estimate3_p(1, 1.0) == 1.0);
    CHECK(estimate3_p(2, 1.0) == 4.0);
    CHECK(estimate3_p(1, 1.5) == doctest::Approx(1.0 / 1.5));
    CHECK(estimate3_eta(0.5, 1.0, 1.0) == doctest::Approx(0.0625));
  }

  TEST_CASE("series lemma") {
    constexpr double euler_gamma = 0.57721566490153286061;
    // sum 1/(n! n) = Ei(1) - gamma
    CHECK(series_sum(1.0, 1.0) == doctest::Approx(std::expint(1.0) - euler_gamma).epsilon(1e-12));
    CHECK(series_sum(1.0, 1.0) == doctest::Approx(1.3179).epsilon(1e-4));
    CHECK(series_sum(1.0, 1.0) <= 2.0 * (std::numbers::e - 1.0));
    CHECK(series_sum(2.0, 0.0) == doctest::Approx(std::expm1(2.0)).epsilon(1e-11));
    std::vector<double> xs;
    for (double x = 0.05; x <= 20.0; x += 0.05) xs.push_back(x);
    const std::vector<double> p0 = {0.0};
    const auto r0 = check_series_lemma(p0, xs);
    CHECK(r0.fitted_constant == 1.0);
    const std::vector<double> ps = {0.0, 0.5, 1.0, 2.0};
    const auto r = check_series_lemma(ps, xs);
    CHECK(r.pass);
    CHECK(std::isfinite(r.fitted_constant));
  }

  TEST_CASE("mass identity and estimates on the isotropic lattice") {
    const auto ctx = make_context(isotropic(1.0, 1), 0.5);
    const Lattice lat(1, 40.0, 1024);
    const auto dk = discretize_kernel(ctx, lat);
    const auto it = iterate_kernels(dk, lat.center(), 20);
    CHECK(check_mass_identity(it, 1e-2).pass);
    const auto c1 = estimate_constants(dk, it, 1);
    // n = 1: the ratio is the truncated over the full cell integral, at most 1 = M.
    CHECK(c1[0] == doctest::Approx(1.0).epsilon(1e-12));
    const auto c2 = estimate_constants(dk, it, 2);
    // n = 1: base constant M a^{-d/alpha - 1} = 2^{-2}.
    CHECK(c2[0] <= 0.25 * (1 + 1e-12));
    for (int which : {1, 2, 3}) {
      const auto rep = check_estimates(dk, it, which);
      CHECK(rep.pass);
      CHECK(std::isfinite(rep.fitted_constant));
    }
    CHECK_THROWS_AS(estimate_constants(dk, it, 4), PreconditionError);
  }

  TEST_CASE("main theorem report") {
    MainTheoremOptions opt;
    opt.eps = {0.5, 0.25};
    opt.times = {0.01, 0.5};
    opt.half_width = 20.0;
    opt.points_per_axis = 512;
    opt.points = {Point{0.0}};
    const auto k = isotropic(1.0, 1);
    TestFunction zero{"zero", TestFunction::Kind::indicator, Point{0.0}, 0.5, 0.0};
    const std::vector<TestFunction> zeros = {zero};
    const auto vac = check_main_theorem(k, zeros, opt);
    CHECK(vac.pass);
    CHECK(vac.fitted_constant == 0.0);
    // Small t with phi supported away from x: the ratio approaches int phi f / int phi |y-x|^{-2} = 1 = M.
    TestFunction far{"far", TestFunction::Kind::indicator, Point{3.5}, 0.5, 1.0};
    const std::vector<TestFunction> fars = {far};
    const auto rep = check_main_theorem(k, fars, opt);
    CHECK(rep.pass);
    CHECK(rep.fitted_constant >= 0.9);
  }

  TEST_CASE("density bound on the Cauchy reference") {
    DensityEstimate est;
    est.binning = Binning::grid(1, -20.0, 20.0, 80);
    est.t = 1.0;
    est.alpha = 1.0;
    est.paths = 1000000000;
    for (std::size_t b = 0; b < est.binning.size(); ++b) {
      const Point c = est.binning.center(b, Point{});
      est.density.push_back(reference_density(1.0, 1, 1.0, c));
      est.std_error.push_back(0.0);
      est.counts.push_back(1000);
    }
    const std::vector<DensityEstimate> ests = {est, est};
    const std::vector<double> eps = {0.1, 0.05};
    const auto rep = check_density_bound(ests, eps);
    CHECK(rep.pass);
    CHECK(rep.fitted_constant >= 1.0 / (std::numbers::pi * std::numbers::pi) * 0.99);
    // p(1, y) = 1 / (pi^2 + y^2): the ratio is 1/pi^2 near 0 and y^2 / (pi^2 + y^2) < 1 in the far branch.
    CHECK(rep.fitted_constant < 1.0);
  }

  TEST_CASE("test functions") {
    const auto fns = default_test_functions(1);
    REQUIRE(fns.size() == 4);
    for (const auto& f : fns) {
      const auto back = test_function_from_json(f.to_json());
      CHECK(back.name == f.name);
      CHECK(back(Point{0.3}) == f(Point{0.3}));
    }
    CHECK(fns[2](Point{0.0}) == 1.0);
    CHECK(fns[2](Point{0.6}) == 0.0);
  }
}
