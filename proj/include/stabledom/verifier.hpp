#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/kernels.hpp"
#include "stabledom/lattice.hpp"
#include "stabledom/montecarlo.hpp"
#include "stabledom/report.hpp"
#include "stabledom/semigroup.hpp"
#include "stabledom/truncation.hpp"

namespace stabledom {

// --- subharmonicity -------------------------------------------------------------

struct SubharmonicitySample {
  Point x{};
  Point y{};
  double eps = 1.0;
};

/// Quasi-random (x, y, eps) triples: x, y in [-box, box]^d with |y - x| >= min_gap,
/// eps cycling through `eps_set`.
std::vector<SubharmonicitySample> default_subharmonicity_samples(int dim, int count, std::span<const double> eps_set,
                                                                  double box = 4.0, double min_gap = 0.05);

struct SubharmonicityOptions {
  double kappa_min = 0.02;  ///< smallest kappa that counts as a certificate
  double kappa_max = 0.999;
  int bisection_steps = 30;
  int n_angles = 128;
  double rel_tol = 1e-10;   ///< quadrature tolerance; also the error bar per sample
};

struct SubharmonicityResult {
  BoundReport report;
  double kappa = 0.0;
};

/// int_{B(y, kappa |y-x|)} |z - x|^{-alpha-d} f_eps(y, z) dz by polar quadrature around y.
double subharmonic_integral(const JumpKernel& kernel, const SubharmonicitySample& s, double kappa, int n_angles = 128,
                            double rel_tol = 1e-10);

/// Largest kappa (by bisection) with LHS <= b_eps(y) |y-x|^{-alpha-d} on all samples.
/// Throws PreconditionError for a sample with x == y.
SubharmonicityResult check_subharmonicity(const JumpKernel& kernel, std::span<const SubharmonicitySample> samples,
                                          const SubharmonicityOptions& options = {});

// --- iterated kernel estimates ----------------------------------------------------

/// Smallest n >= 1 such that (1 - ratio)^m (m+1)^{d/alpha} < 1/(m+1) for every m >= n,
/// where ratio = a / A.
int estimate3_n0(double ratio, double d_over_alpha);

/// The proof device p = d 2^{max(d/alpha, 1) - 1} / alpha.
double estimate3_p(int dim, double alpha);

/// eta = ((a/A)^2 / (2 (1 + p)))^{1/alpha}.
double estimate3_eta(double ratio, double p, double alpha);

struct EstimateOptions {
  int drift_from = 10;       ///< orders [drift_from, drift_to] enter the drift test
  int drift_to = 20;
  double max_drift = 0.2;    ///< largest allowed relative growth of C_n within the range
};

/// Per-order constants C_n of Estimate 1, 2 or 3 in cell-integrated form:
///   1: mass_n b_bar / (n W(x, cell)),  W = int_cell |y - x|^{-alpha-d}
///   2: density_n / (b_bar^{d/alpha} (1 - q^n)),  q = 1 - b_eps(x) / b_bar
///   3: density_n n^{d/alpha} / b_bar^{d/alpha}
/// where mass_n is normalized by b_bar^n and density_n = mass_n / h^d.
std::vector<double> estimate_constants(const DiscreteKernel& kernel, std::span<const IteratedKernel> iterated,
                                       int which);

/// Fitted constants, drift over the top half of orders and the n = 1 base
/// constant (M for Estimate 1, M a^{-d/alpha-1} for Estimate 2). Fails when
/// any iterate breached the mass identity.
BoundReport check_estimates(const DiscreteKernel& kernel, std::span<const IteratedKernel> iterated, int which,
                            const EstimateOptions& options = {});

/// The mass identity at every order as a gated report.
BoundReport check_mass_identity(std::span<const IteratedKernel> iterated, double tolerance);

// --- series lemma ---------------------------------------------------------------

/// sum_{n>=1} x^{n+p} / (n! n^p), summed until the relative tail is below 1e-12.
double series_sum(double x, double p);

/// C(p) = max over x of series_sum(x, p) / (e^x - 1). The denominator is
/// summed with the same routine at p = 0, so C(0) is exactly 1.
BoundReport check_series_lemma(std::span<const double> p_set, std::span<const double> x_set);

// --- semigroup bound -------------------------------------------------------------

/// Nonnegative test function: a Gaussian bump or the indicator of a ball.
struct TestFunction {
  enum class Kind { bump, indicator };
  std::string name;
  Kind kind = Kind::bump;
  Point center{};
  double width = 1.0;   ///< bump scale or indicator radius
  double height = 1.0;

  double operator()(const Point& x) const;
  bool supports(const Point& x) const;  ///< x in the (numerical) support
  nlohmann::json to_json() const;
};

TestFunction test_function_from_json(const nlohmann::json& j);

/// Four default functions: bumps at 0 and 3, indicators of [-0.5, 0.5] and [1, 2] (d = 1 layout).
std::vector<TestFunction> default_test_functions(int dim);

struct MainTheoremOptions {
  std::vector<double> eps = {0.5, 0.25, 0.125, 0.0625};
  std::vector<double> times = {0.1, 0.5, 1.0};
  double half_width = 40.0;
  int points_per_axis = 2048;
  std::vector<Point> points = {Point{-2.0}, Point{0.0}, Point{0.5}, Point{1.5}, Point{3.0}, Point{5.0}};
  double stability_factor = 2.0;
  SeriesOptions series;
  ContextOptions context;
  DiscretizeOptions discretize;
};

/// Ratio (e^{tA_eps} phi(x) - e^{-t b_eps(x)} phi(x)) / int phi(y) min(t^{-d/alpha}, t |y-x|^{-alpha-d}) dy
/// over the functions, times and points for every eps; passes when each
/// fitted C is finite and max C / min C across eps is below the stability factor.
BoundReport check_main_theorem(const JumpKernel& kernel, std::span<const TestFunction> functions,
                               const MainTheoremOptions& options = {});

struct DensityBoundOptions {
  std::uint64_t min_count = 30;
  double stability_factor = 2.0;
};

/// Bin ratios density / mean over the bin of min(t^{-d/alpha}, t |y-x0|^{-alpha-d}),
/// one estimate per eps; passes when the fitted constants are finite and stable.
BoundReport check_density_bound(std::span<const DensityEstimate> estimates, std::span<const double> eps,
                                const DensityBoundOptions& options = {});

}  // namespace stabledom
