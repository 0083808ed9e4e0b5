#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/kernels.hpp"
#include "stabledom/lattice.hpp"
#include "stabledom/point.hpp"
#include "stabledom/truncation.hpp"

namespace stabledom {

/// Poisson(lambda) masses for n in [first, last]; everything outside carries at most `tail` mass.
struct PoissonWindow {
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<double> weights;  ///< weights[k] = pois(first + k; lambda)
  double tail = 0.0;

  double weight(std::size_t n) const { return n < first || n > last ? 0.0 : weights[n - first]; }
};

/// Grows a window from the mode outward in log space until the excluded mass is
/// at most `tol`. Throws SeriesTruncationError if more than `max_terms` are needed.
PoissonWindow poisson_window(double lambda, double tol, std::size_t max_terms);

/// Gamma_eps phi = sum_j entry(i, j) phi_j + atom_i phi_i.
///
/// In lumped mode the atom is b_bar minus the full row mass (grid row plus
/// boundary lumps), so Gamma_eps 1 = b_bar exactly. In absorbing mode the atom
/// is b_bar - b_eps(x_i) and mass leaving the box is lost.
Field apply_gamma(const DiscreteKernel& kernel, const Field& phi, BoundaryMode mode = BoundaryMode::lumped);

/// A_eps phi = Gamma_eps phi - b_bar phi.
Field apply_generator(const DiscreteKernel& kernel, const Field& phi, BoundaryMode mode = BoundaryMode::lumped);

struct SeriesOptions {
  double tail_tol = 1e-10;
  std::size_t max_terms = 100000;
  BoundaryMode mode = BoundaryMode::lumped;
  /// Uniformization rate override; 0 uses the smallest admissible rate. Values
  /// below the largest row mass are raised to it.
  double b_bar = 0.0;
};

/// e^{t A_eps} phi on a lattice.
struct SemigroupEvaluation {
  double t = 0.0;
  double b_bar = 0.0;          ///< uniformization rate actually used
  std::size_t order = 0;       ///< last series term N(t)
  double tail = 0.0;           ///< Poisson mass left out
  Field result;

  nlohmann::json summary() const;
};

/// sum_n pois(n; t b_bar) P^n phi with P = Gamma_eps / b_bar.
SemigroupEvaluation apply_semigroup(const DiscreteKernel& kernel, const Field& phi, double t,
                                    const SeriesOptions& options = {});

/// Several horizons sharing the iterates P^n phi.
std::vector<SemigroupEvaluation> apply_semigroup(const DiscreteKernel& kernel, const Field& phi,
                                                 std::span<const double> times, const SeriesOptions& options = {});

/// Smooth test function given analytically with first and second derivatives.
struct Bump {
  enum class Kind { gaussian, constant };
  Kind kind = Kind::gaussian;
  Point center{};
  double scale = 1.0;
  double amplitude = 1.0;

  static Bump gaussian(Point center = {}, double scale = 1.0, double amplitude = 1.0);
  static Bump constant(double value);

  double value(const Point& x) const;
  Point gradient(const Point& x) const;
  /// uᵀ H(x) u.
  double curvature(const Point& x, const Point& u) const;
  /// Limit of the value at infinity.
  double far_value() const { return kind == Kind::constant ? amplitude : 0.0; }
  /// Radius around the center beyond which value - far_value is below 1e-17 * amplitude.
  double support_radius() const;
};

struct LimitGeneratorResult {
  std::vector<double> eps;
  std::vector<Point> points;
  std::vector<std::vector<double>> approx;  ///< approx[k][i] = A_{eps_k} phi(points[i])
  std::vector<double> limit;                ///< Aphi(points[i])
  std::vector<double> sup_difference;       ///< max_i |limit_i - approx[k][i]|
  double slope = 0.0;                       ///< least-squares slope of log sup_difference vs log eps
  double expected_slope = 0.0;              ///< 2 - alpha (sym_h) or 1 - alpha

  nlohmann::json to_json() const;
};

/// A_eps phi(x) = int_{|h| > eps} (phi(x+h) - phi(x)) f(x, x+h) dh by direct polar quadrature.
double truncated_generator(const JumpKernel& kernel, const Bump& phi, const Point& x, double eps,
                           int n_angles = 64);

/// The limit generator Aphi(x) as the eps -> 0 principal value; the small-ball
/// part uses the second-order Taylor expansion of phi.
double limit_generator(const JumpKernel& kernel, const Bump& phi, const Point& x, int n_angles = 64);

/// Evaluates A_eps phi at `points` for every eps and fits the convergence
/// order. Throws PreconditionError for fewer than four eps values or a kernel
/// that is neither sym_h nor alpha < 1.
LimitGeneratorResult apply_limit_generator(const JumpKernel& kernel, const Bump& phi,
                                           std::span<const Point> points, std::span<const double> eps_sweep,
                                           int n_angles = 64);

/// c_{d,alpha} = int (1 - cos<e1, h>) |h|^{-alpha-d} dh, so the isotropic
/// kernel |h|^{-alpha-d} has symbol c |xi|^alpha.
double stable_constant(double alpha, int dim);

/// Transition density p(t, x) of the isotropic stable semigroup generated by
/// |h|^{-alpha-d} (started at 0), by Fourier or Hankel inversion. d in {1, 2}.
/// Throws QuadratureError when the inversion error estimate exceeds `tol`
/// relative to the value.
double reference_density(double alpha, int dim, double t, const Point& x, double tol = 1e-8);

}  // namespace stabledom
