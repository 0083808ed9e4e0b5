#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/point.hpp"
#include "stabledom/report.hpp"

namespace stabledom {

/// Structural properties a kernel author declares for a JumpKernel.
struct KernelTraits {
  bool sym_h = false;                  ///< f(x, x+h) == f(x, x-h)
  bool sym_xy = false;                 ///< f(x, y) == f(y, x)
  bool translation_invariant = false;  ///< f(x, y) depends on y - x only
  bool envelope_exact = false;         ///< f(x, y) == M |y-x|^{-alpha-d} identically
};

/// A jump intensity f(x, y) dominated by M |y - x|^{-alpha-d}.
///
/// Instances are immutable; copies share nothing mutable and may be used
/// from any number of threads.
class JumpKernel {
 public:
  using Intensity = std::function<double(const Point& x, const Point& y)>;

  /// Throws PreconditionError on an invalid dimension, alpha outside (0, 2),
  /// a non-positive M, a negative a, or alpha >= 1 without sym_h.
  JumpKernel(std::string name, int dim, double alpha, double M, double a, KernelTraits traits,
             Intensity intensity, nlohmann::json parameters = nlohmann::json::object());

  /// f(x, y); throws CoincidentPointsError when x == y.
  double evaluate(const Point& x, const Point& y) const;

  /// f(x, y) without the coincidence check, for inner loops that exclude the diagonal.
  double raw(const Point& x, const Point& y) const { return intensity_(x, y); }

  /// M |y - x|^{-alpha-d}.
  double envelope(double r) const { return M_ * std::pow(r, -alpha_ - dim_); }

  /// Constant A with sup_x b_eps(x) <= A eps^{-alpha}: A = M s_{d-1} / alpha.
  double rate_constant() const { return M_ * unit_sphere_area(dim_) / alpha_; }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double M() const { return M_; }
  double a() const { return a_; }
  const KernelTraits& traits() const { return traits_; }
  const nlohmann::json& parameters() const { return parameters_; }

  /// Same intensity with different declared constants (used to test the
  /// assumption checks against deliberately wrong declarations).
  JumpKernel with_declared_constants(double M, double a) const;

  nlohmann::json describe() const;

 private:
  std::string name_;
  int dim_;
  double alpha_;
  double M_;
  double a_;
  KernelTraits traits_;
  Intensity intensity_;
  nlohmann::json parameters_;
};

/// f(x, y) = |y - x|^{-alpha-d}. M = 1, a = s_{d-1}/alpha.
JumpKernel isotropic(double alpha, int dim);

/// f(x, x+h) = 1{h/|h| in V u (-V)} |h|^{-alpha-d} where V is the spherical cap
/// of directions within `half_angle` of `axis` (d <= 3, half_angle in (0, pi/2]).
JumpKernel double_cone(double alpha, int dim, Point axis, double half_angle);

/// f(x, y) = (1 + eta sin<u,x> sin<u,y>) |y - x|^{-alpha-d}, eta in (0, 1).
/// Symmetric in (x, y) but not in h, so alpha < 1 is required.
JumpKernel stable_like(double alpha, int dim, double eta, Point u);

/// c * f with M and a scaled accordingly (M kept when c == 0).
JumpKernel scaled(const JumpKernel& kernel, double c);

/// Builds a built-in kernel from its JSON description, e.g.
/// {"name": "isotropic", "alpha": 1.0, "dim": 1}. Optional "M" / "a" keys
/// override the declared constants. Throws ConfigError on unknown names.
JumpKernel kernel_from_json(const nlohmann::json& spec);

/// Finite sampling plan standing in for the universal quantifiers of the
/// structural assumptions.
struct AssumptionSamplePlan {
  int base_points = 32;       ///< quasi-random x in [-box, box]^d
  double box = 2.0;
  int offsets = 64;           ///< h with log-spaced radii
  double min_radius = 1e-3;
  double max_radius = 1e2;
  std::vector<double> eps = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  double continuity_step = 1e-6;  ///< |x' - x| for the continuity smoke test
  double symmetry_tol = 1e-12;    ///< relative tolerance for symmetry defects
  double continuity_tol = 1e-2;   ///< max relative change of f under the x-step
};

struct QuadratureSpec;  // truncation.hpp

/// Result of verify_assumptions: one report per assumption plus tightest
/// empirical constants.
struct AssumptionReport {
  BoundReport domination;
  BoundReport h_symmetry;
  BoundReport xy_symmetry;
  BoundReport lower_rate;
  BoundReport continuity;     ///< smoke test
  double fitted_M = 0.0;
  double fitted_a = 0.0;
  bool pass = false;

  std::vector<BoundReport> reports() const {
    return {domination, h_symmetry, xy_symmetry, lower_rate, continuity};
  }
};

AssumptionReport verify_assumptions(const JumpKernel& kernel, const AssumptionSamplePlan& plan);
AssumptionReport verify_assumptions(const JumpKernel& kernel, const AssumptionSamplePlan& plan,
                                    const QuadratureSpec& quad);

}  // namespace stabledom
