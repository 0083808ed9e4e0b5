#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/kernels.hpp"
#include "stabledom/point.hpp"

namespace stabledom {

/// Polar quadrature settings for shell integrals of a kernel.
///
/// Radial integrals run over [eps, r_tail] in log-radius, split into
/// `radial_panels` log-spaced panels that are each integrated by adaptive
/// Gauss-Kronrod (15 points). Directions come from sphere_directions().
struct QuadratureSpec {
  int radial_panels = 64;
  int n_angles = 256;
  double r_tail = 0.0;          ///< 0 selects max(1e3 eps, 1e3)
  double panel_tol = 1e-11;     ///< relative tolerance per panel
  int max_depth = 12;
  double max_rel_error = 1e-6;  ///< larger estimated errors raise QuadratureError

  double r_tail_for(double eps) const;
};

void to_json(nlohmann::json& j, const QuadratureSpec& q);
void from_json(const nlohmann::json& j, QuadratureSpec& q);

/// b_eps(x) with its error budget.
///
/// value = shell quadrature over eps < |h| < r_tail + tail estimate, where
/// the tail estimate scales the envelope tail by the ratio of the kernel to its
/// envelope integrated over the outer decade [r_tail/10, r_tail] of each ray.
/// The certified tail interval is [0, tail_bound] with tail_bound = M s_{d-1} r_tail^{-alpha} / alpha.
struct RateEstimate {
  double value = 0.0;
  double quad_error = 0.0;
  double tail_estimate = 0.0;
  double tail_bound = 0.0;
  double r_tail = 0.0;

  double shell() const { return value - tail_estimate; }
  double lower() const { return shell() - quad_error; }
  double upper() const { return shell() + quad_error + tail_bound; }
};

/// b_eps(x) = int_{|h| > eps} f(x, x+h) dh by polar quadrature.
/// Throws PreconditionError for eps <= 0 and QuadratureError when the
/// estimated relative error exceeds quad.max_rel_error.
RateEstimate rate_integral(const JumpKernel& kernel, double eps, const Point& x,
                           const QuadratureSpec& quad = {});

/// Options for make_context.
struct ContextOptions {
  QuadratureSpec quad;
  double safety = 1.05;        ///< inflation of the sampled sup for non-invariant kernels
  int x_samples = 64;          ///< uniform x-grid per axis over [-x_half_width, x_half_width]
  double x_half_width = 2.0;
  std::vector<Point> extra_points;  ///< additional x at which b_eps is sampled
};

void to_json(nlohmann::json& j, const ContextOptions& o);

/// A kernel truncated at radius eps together with its uniformization rate.
///
/// Immutable after construction; all member functions are const and pure.
class TruncationContext {
 public:
  TruncationContext(JumpKernel kernel, double eps, double b_bar, double b_under,
                    QuadratureSpec quad, nlohmann::json provenance = {});

  const JumpKernel& kernel() const { return kernel_; }
  double eps() const { return eps_; }
  /// Certified upper bound for sup_x b_eps(x) (the uniformization rate).
  double b_bar() const { return b_bar_; }
  /// Smallest sampled b_eps(x) (lower error bars).
  double b_under() const { return b_under_; }
  const QuadratureSpec& quad() const { return quad_; }

  /// b_eps(x) by quadrature; for translation-invariant kernels the value is
  /// computed once at construction and returned for every x.
  RateEstimate b_eps(const Point& x) const;

  /// f_eps(x, y) = 1{|y - x| > eps} f(x, y).
  double truncated_eval(const Point& x, const Point& y) const;

  /// Analytic bound A eps^{-alpha}, A = M s_{d-1} / alpha.
  double analytic_bound() const { return kernel_.rate_constant() * std::pow(eps_, -kernel_.alpha()); }

  /// Copy with a larger uniformization rate (adds lazy self-jumps only).
  TruncationContext with_b_bar(double b_bar) const;

  nlohmann::json to_json() const;

 private:
  JumpKernel kernel_;
  double eps_;
  double b_bar_;
  double b_under_;
  QuadratureSpec quad_;
  nlohmann::json provenance_;
  RateEstimate invariant_rate_{};
};

/// Builds a context: b_bar is the sup of upper error bars over the sampled
/// x-grid inflated by `safety` and capped by the analytic bound; for
/// translation-invariant kernels b_bar equals b_eps exactly.
TruncationContext make_context(const JumpKernel& kernel, double eps, const ContextOptions& options = {});

}  // namespace stabledom
