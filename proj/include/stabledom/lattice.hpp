#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/point.hpp"
#include "stabledom/truncation.hpp"

namespace stabledom {

/// Cell-centred regular grid on the box [-R, R]^d (d = 1 or 2).
///
/// Node k along an axis sits at -R + (k + 1/2) h with h = 2R / n, so the
/// cells tile the box exactly. Node indices are row-major with axis 0 fastest.
class Lattice {
 public:
  Lattice(int dim, double half_width, int points_per_axis);

  int dim() const { return dim_; }
  double half_width() const { return R_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return h_; }
  /// Quadrature weight of one node, h^d.
  double weight() const { return w_; }
  std::size_t size() const { return size_; }

  Point point(std::size_t index) const;
  std::array<int, 2> coords(std::size_t index) const;
  std::size_t index(int i0, int i1 = 0) const;
  /// Node whose cell contains p (clamped into the box).
  std::size_t nearest(const Point& p) const;
  /// Node closest to the origin.
  std::size_t center() const { return nearest(Point{}); }

  bool operator==(const Lattice& other) const = default;
  nlohmann::json to_json() const;

 private:
  int dim_;
  double R_;
  int n_;
  double h_;
  double w_;
  std::size_t size_;
};

/// A function sampled at the nodes of a lattice.
class Field {
 public:
  Field(Lattice lattice, double fill = 0.0);
  Field(Lattice lattice, std::vector<double> values);

  static Field sample(const Lattice& lattice, const std::function<double(const Point&)>& fn);

  const Lattice& lattice() const { return lattice_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double sup_norm() const;
  /// Quadrature integral sum_i value_i * w.
  double integral() const;

 private:
  Lattice lattice_;
  std::vector<double> values_;
};

/// Largest |a - b| over the nodes; throws LatticeMismatchError for different lattices.
double sup_distance(const Field& a, const Field& b);

/// How the discretized chain treats jumps that would leave the box.
enum class BoundaryMode {
  absorbing,  ///< out-of-box mass is lost
  lumped,     ///< out-of-box mass lands on the boundary cell hit by the outgoing ray
};

struct DiscretizeOptions {
  std::size_t max_nodes = 4096;
  /// Dense storage limit (entries) for kernels that are not translation invariant.
  std::size_t max_dense_entries = std::size_t{1} << 24;
};

/// Transition masses of the truncated kernel on a lattice.
///
/// entry(i, j) approximates the mass int_{cell j} f_eps(x_i, y) dy by product
/// integration: f(x_i, x_j) |x_j - x_i|^{alpha+d} times the exact cell
/// integral of |h|^{-alpha-d} over cell j minus the eps-ball around x_i. For
/// sym_xy kernels entry(i, j) == entry(j, i) exactly.
///
/// rates() holds b_eps at each node from the truncation quadrature (the
/// continuum value, not the row sum); the gap rates - row_sums is the mass
/// that leaves the box plus discretization error.
class DiscreteKernel {
 public:
  const Lattice& lattice() const { return lattice_; }
  const TruncationContext& context() const { return ctx_; }
  double b_bar() const { return ctx_.b_bar(); }

  std::span<const double> rates() const { return rates_; }
  std::span<const double> rate_errors() const { return rate_errors_; }
  std::span<const double> row_sums() const { return row_sums_; }
  /// Envelope bound on the mass of f_eps(x_i, .) outside the box.
  std::span<const double> out_of_box_bounds() const { return out_bounds_; }
  /// Boundary nodes and masses receiving the out-of-box mass of node i in lumped mode.
  const std::vector<std::pair<std::size_t, double>>& lumps(std::size_t i) const { return lumps_[i]; }

  double entry(std::size_t i, std::size_t j) const;
  /// Cell integral of |h|^{-alpha-d} over cell j relative to node i; with
  /// `truncated` the eps-ball is removed. Infinite for i == j untruncated.
  double envelope_cell_integral(std::size_t i, std::size_t j, bool truncated) const;

  /// out_i = sum_j entry(i, j) phi_j (+ lumped boundary terms).
  void apply(std::span<const double> phi, std::span<double> out, BoundaryMode mode) const;
  /// out_j = sum_i mass_i entry(i, j) (+ lumped boundary terms).
  void push(std::span<const double> mass, std::span<double> out, BoundaryMode mode) const;

  bool translation_invariant() const { return !stencil_.empty(); }
  nlohmann::json summary() const;

 private:
  friend DiscreteKernel discretize_kernel(const TruncationContext&, const Lattice&, const DiscretizeOptions&);
  DiscreteKernel(TruncationContext ctx, Lattice lattice) : ctx_(std::move(ctx)), lattice_(std::move(lattice)) {}

  std::size_t offset_index(std::size_t i, std::size_t j) const;
  void row(std::size_t i, std::span<double> out) const;

  TruncationContext ctx_;
  Lattice lattice_;
  std::vector<double> trunc_cells_;  // per offset
  std::vector<double> full_cells_;   // per offset
  std::vector<double> stencil_;      // per offset, translation-invariant kernels
  std::vector<double> dense_;        // row-major, other kernels
  std::vector<double> rates_;
  std::vector<double> rate_errors_;
  std::vector<double> row_sums_;
  std::vector<double> out_bounds_;
  std::vector<std::vector<std::pair<std::size_t, double>>> lumps_;
};

/// Throws ResolutionError when spacing >= eps, BudgetError when the node or
/// dense-storage budget is exceeded, PreconditionError when some node has
/// b_eps above the context's b_bar.
DiscreteKernel discretize_kernel(const TruncationContext& ctx, const Lattice& lattice,
                                 const DiscretizeOptions& options = {});

/// Grid representation of f_{n,eps}(x, .) normalized by b_bar^n.
///
/// `mass[j]` is the normalized cell mass int_{cell j} f_{n,eps}(x, y) dy / b_bar^n;
/// the cell-average density is mass[j] / w.
struct IteratedKernel {
  std::size_t source = 0;
  int order = 0;
  std::vector<double> mass;
  double atom_weight = 0.0;     ///< ((b_bar - b_eps(x)) / b_bar)^n
  double raw_defect = 0.0;      ///< (1 - atom_weight) - sum(mass), normalized
  double leakage_bar = 0.0;     ///< accumulated error bar for raw_defect
  bool breach = false;          ///< mass identity defect above tolerance

  double grid_mass() const;
  double density(std::size_t j, double weight) const { return mass[j] / weight; }
};

struct IterationOptions {
  BoundaryMode mode = BoundaryMode::absorbing;
  double tolerance = 1e-2;
};

/// The three-term recursion for f_{n,eps}(x, .), n = 1..max_order, in normalized form.
std::vector<IteratedKernel> iterate_kernels(const DiscreteKernel& kernel, std::size_t source, int max_order,
                                            const IterationOptions& options = {});

/// max(0, |target - grid mass| - leakage bar) with target 1 - atom_weight, all
/// normalized by b_bar^n.
double mass_identity_defect(const IteratedKernel& iterated);

}  // namespace stabledom
