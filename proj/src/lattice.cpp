#include "stabledom/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "stabledom/errors.hpp"
#include "stabledom/sampling.hpp"
#include "parallel.hpp"

namespace stabledom {

// --- Lattice / Field ---------------------------------------------------------

Lattice::Lattice(int dim, double half_width, int points_per_axis)
    : dim_(dim), R_(half_width), n_(points_per_axis) {
  if (dim_ != 1 && dim_ != 2) throw PreconditionError("Lattice: only d = 1 and d = 2 are supported");
  if (!(R_ > 0.0)) throw PreconditionError("Lattice: half width must be positive");
  if (n_ < 2) throw PreconditionError("Lattice: need at least two points per axis");
  h_ = 2.0 * R_ / n_;
  w_ = std::pow(h_, dim_);
  size_ = dim_ == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
}

Point Lattice::point(std::size_t index) const {
  auto c = coords(index);
  Point p{};
  for (int k = 0; k < dim_; ++k) p[k] = -R_ + (c[k] + 0.5) * h_;
  return p;
}

std::array<int, 2> Lattice::coords(std::size_t index) const {
  if (dim_ == 1) return {static_cast<int>(index), 0};
  return {static_cast<int>(index % n_), static_cast<int>(index / n_)};
}

std::size_t Lattice::index(int i0, int i1) const {
  if (dim_ == 1) return static_cast<std::size_t>(i0);
  return static_cast<std::size_t>(i1) * n_ + i0;
}

std::size_t Lattice::nearest(const Point& p) const {
  auto axis = [&](double v) { return std::clamp(static_cast<int>(std::floor((v + R_) / h_)), 0, n_ - 1); };
  return dim_ == 1 ? index(axis(p[0])) : index(axis(p[0]), axis(p[1]));
}

nlohmann::json Lattice::to_json() const {
  return {{"dim", dim_}, {"R", R_}, {"n", n_}, {"spacing", h_}, {"weight", w_}};
}

Field::Field(Lattice lattice, double fill) : lattice_(std::move(lattice)), values_(lattice_.size(), fill) {}

Field::Field(Lattice lattice, std::vector<double> values) : lattice_(std::move(lattice)), values_(std::move(values)) {
  if (values_.size() != lattice_.size()) throw LatticeMismatchError("Field: value count does not match lattice");
}

Field Field::sample(const Lattice& lattice, const std::function<double(const Point&)>& fn) {
  std::vector<double> v(lattice.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(lattice.point(i));
  return Field(lattice, std::move(v));
}

double Field::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * lattice_.weight();
}

double sup_distance(const Field& a, const Field& b) {
  if (!(a.lattice() == b.lattice())) throw LatticeMismatchError("sup_distance: lattices differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// --- cell integrals ------------------------------------------------------------

namespace {

// Integral of r^{-p} over the interval [a, b] of radii (0 <= a < b), restricted to r > eps.
double interval_integral(double a, double b, double eps, double alpha) {
  double lo = std::max(a, eps);
  if (lo >= b) return 0.0;
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return (std::pow(lo, -alpha) - std::pow(b, -alpha)) / alpha;
}

constexpr double kGaussNodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
constexpr double kGaussWeights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};

// Leaf rule for a rectangle crossed by the circle |h| = eps: iterated Gauss
// integral split at every point where the inner limits change smoothness.
double cut_leaf_integral(double x0, double x1, double y0, double y1, double eps, double power) {
  std::vector<double> breaks = {x0, x1};
  for (double y : {y0, y1, 0.0}) {
    if (std::abs(y) < eps) {
      const double c = std::sqrt(eps * eps - y * y);
      for (double b : {-c, c}) {
        if (b > x0 && b < x1) breaks.push_back(b);
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  auto inner = [&](double x) {
    // y-range with x^2 + y^2 > eps^2, split at the circle.
    double sum = 0.0;
    auto piece = [&](double a, double b) {
      if (b <= a) return;
      const double c = 0.5 * (a + b), r = 0.5 * (b - a);
      for (int k = 0; k < 4; ++k) {
        double y = c + r * kGaussNodes[k];
        sum += r * kGaussWeights[k] * std::pow(x * x + y * y, -0.5 * power);
      }
    };
    if (std::abs(x) >= eps) {
      piece(y0, y1);
    } else {
      const double c = std::sqrt(eps * eps - x * x);
      piece(y0, std::min(y1, -c));
      piece(std::max(y0, c), y1);
    }
    return sum;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (b <= a) continue;
    // x = a + (b - a) s^2 clusters nodes toward a, x = b - (b - a) s^2 toward b;
    // splitting at the midpoint absorbs square-root behaviour at either end.
    const double m = 0.5 * (a + b);
    for (int side = 0; side < 2; ++side) {
      const double end = side == 0 ? a : b;
      const double len = m - end;
      for (int k = 0; k < 4; ++k) {
        const double s = 0.5 * (1.0 + kGaussNodes[k]);
        const double x = end + len * s * s;
        total += 0.5 * kGaussWeights[k] * std::abs(len) * 2.0 * s * inner(x);
      }
    }
  }
  return total;
}

// Integral of |h|^{-power} over [x0,x1] x [y0,y1] restricted to |h| > eps.
double rect_integral(double x0, double x1, double y0, double y1, double eps, double power, int depth) {
  auto dist_to = [](double lo, double hi) { return lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0); };
  const double dx = dist_to(x0, x1);
  const double dy = dist_to(y0, y1);
  const double rmin = std::hypot(dx, dy);
  const double rmax = std::hypot(std::max(std::abs(x0), std::abs(x1)), std::max(std::abs(y0), std::abs(y1)));
  if (rmax <= eps) return 0.0;
  const double size = std::max(x1 - x0, y1 - y0);
  const bool cut = rmin < eps;
  if (cut && depth >= 6) return cut_leaf_integral(x0, x1, y0, y1, eps, power);
  if ((!cut && rmin >= 2.0 * size) || depth >= 9) {
    if (rmin == 0.0 && eps == 0.0) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double hx = 0.5 * (x1 - x0), hy = 0.5 * (y1 - y0);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        double px = cx + hx * kGaussNodes[a];
        double py = cy + hy * kGaussNodes[b];
        double r = std::hypot(px, py);
        if (r > eps) sum += kGaussWeights[a] * kGaussWeights[b] * std::pow(r, -power);
      }
    }
    return sum * hx * hy;
  }
  const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
  return rect_integral(x0, mx, y0, my, eps, power, depth + 1) + rect_integral(mx, x1, y0, my, eps, power, depth + 1) +
         rect_integral(x0, mx, my, y1, eps, power, depth + 1) + rect_integral(mx, x1, my, y1, eps, power, depth + 1);
}

// Fills per-offset tables of cell integrals of |h|^{-alpha-d}.
void cell_tables(const Lattice& lat, double eps, double alpha, std::vector<double>& trunc, std::vector<double>& full) {
  const int n = lat.points_per_axis();
  const double h = lat.spacing();
  const int span = 2 * n - 1;
  if (lat.dim() == 1) {
    trunc.assign(span, 0.0);
    full.assign(span, 0.0);
    for (int k = -(n - 1); k <= n - 1; ++k) {
      double c = std::abs(k) * h;
      double a = k == 0 ? 0.0 : c - 0.5 * h;
      // The k == 0 cell straddles the origin; it lies inside the eps-ball since h < eps.
      trunc[k + n - 1] = k == 0 ? 0.0 : interval_integral(a, c + 0.5 * h, eps, alpha);
      full[k + n - 1] = k == 0 ? std::numeric_limits<double>::infinity() : interval_integral(a, c + 0.5 * h, 0.0, alpha);
    }
    return;
  }
  const double power = alpha + 2.0;
  std::vector<double> qt(static_cast<std::size_t>(n) * n), qf(static_cast<std::size_t>(n) * n);
#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      double x0 = (a - 0.5) * h, x1 = (a + 0.5) * h, y0 = (b - 0.5) * h, y1 = (b + 0.5) * h;
      double t = rect_integral(x0, x1, y0, y1, eps, power, 0);
      double f = (a == 0 && b == 0) ? std::numeric_limits<double>::infinity()
                                    : rect_integral(x0, x1, y0, y1, 0.0, power, 0);
      qt[static_cast<std::size_t>(a) * n + b] = qt[static_cast<std::size_t>(b) * n + a] = t;
      qf[static_cast<std::size_t>(a) * n + b] = qf[static_cast<std::size_t>(b) * n + a] = f;
    }
  }
  trunc.assign(static_cast<std::size_t>(span) * span, 0.0);
  full.assign(static_cast<std::size_t>(span) * span, 0.0);
  for (int k1 = -(n - 1); k1 <= n - 1; ++k1) {
    for (int k0 = -(n - 1); k0 <= n - 1; ++k0) {
      std::size_t dst = static_cast<std::size_t>(k1 + n - 1) * span + (k0 + n - 1);
      std::size_t src = static_cast<std::size_t>(std::abs(k0)) * n + std::abs(k1);
      trunc[dst] = qt[src];
      full[dst] = qf[src];
    }
  }
}

// Offset vector (as a point) of table slot `slot`.
Point offset_point(const Lattice& lat, std::size_t slot) {
  const int n = lat.points_per_axis();
  const int span = 2 * n - 1;
  Point p{};
  if (lat.dim() == 1) {
    p[0] = (static_cast<int>(slot) - (n - 1)) * lat.spacing();
  } else {
    p[0] = (static_cast<int>(slot % span) - (n - 1)) * lat.spacing();
    p[1] = (static_cast<int>(slot / span) - (n - 1)) * lat.spacing();
  }
  return p;
}

}  // namespace

// --- DiscreteKernel ----------------------------------------------------------

std::size_t DiscreteKernel::offset_index(std::size_t i, std::size_t j) const {
  const int n = lattice_.points_per_axis();
  const auto ci = lattice_.coords(i);
  const auto cj = lattice_.coords(j);
  if (lattice_.dim() == 1) return static_cast<std::size_t>(cj[0] - ci[0] + n - 1);
  const std::size_t span = 2 * static_cast<std::size_t>(n) - 1;
  return static_cast<std::size_t>(cj[1] - ci[1] + n - 1) * span + static_cast<std::size_t>(cj[0] - ci[0] + n - 1);
}

double DiscreteKernel::entry(std::size_t i, std::size_t j) const {
  if (!stencil_.empty()) return stencil_[offset_index(i, j)];
  return dense_[i * lattice_.size() + j];
}

double DiscreteKernel::envelope_cell_integral(std::size_t i, std::size_t j, bool truncated) const {
  const std::size_t slot = offset_index(i, j);
  return truncated ? trunc_cells_[slot] : full_cells_[slot];
}

void DiscreteKernel::row(std::size_t i, std::span<double> out) const {
  for (std::size_t j = 0; j < lattice_.size(); ++j) out[j] = entry(i, j);
}

void DiscreteKernel::apply(std::span<const double> phi, std::span<double> out, BoundaryMode mode) const {
  const std::size_t N = lattice_.size();
  if (phi.size() != N || out.size() != N) throw LatticeMismatchError("DiscreteKernel::apply: size mismatch");
  const int n = lattice_.points_per_axis();
  const std::size_t span = 2 * static_cast<std::size_t>(n) - 1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double sum = 0.0;
    if (!stencil_.empty()) {
      if (lattice_.dim() == 1) {
        const double* s = stencil_.data() + (n - 1 - i);
        for (std::size_t j = 0; j < N; ++j) sum += s[j] * phi[j];
      } else {
        const auto ci = lattice_.coords(i);
        for (int r = 0; r < n; ++r) {
          const double* s = stencil_.data() + static_cast<std::size_t>(r - ci[1] + n - 1) * span + (n - 1 - ci[0]);
          const double* p = phi.data() + static_cast<std::size_t>(r) * n;
          for (int c = 0; c < n; ++c) sum += s[c] * p[c];
        }
      }
    } else {
      const double* k = dense_.data() + i * N;
      for (std::size_t j = 0; j < N; ++j) sum += k[j] * phi[j];
    }
    if (mode == BoundaryMode::lumped) {
      for (const auto& [j, m] : lumps_[i]) sum += m * phi[j];
    }
    out[i] = sum;
  }
}

void DiscreteKernel::push(std::span<const double> mass, std::span<double> out, BoundaryMode mode) const {
  const std::size_t N = lattice_.size();
  if (mass.size() != N || out.size() != N) throw LatticeMismatchError("DiscreteKernel::push: size mismatch");
  if (!stencil_.empty() || ctx_.kernel().traits().sym_xy) {
    // entry(i, j) == entry(j, i): pushing is applying.
    apply(mass, out, BoundaryMode::absorbing);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(N); ++jj) {
      const std::size_t j = static_cast<std::size_t>(jj);
      double sum = 0.0;
      for (std::size_t i = 0; i < N; ++i) sum += mass[i] * dense_[i * N + j];
      out[j] = sum;
    }
  }
  if (mode == BoundaryMode::lumped) {
    for (std::size_t i = 0; i < N; ++i) {
      for (const auto& [j, m] : lumps_[i]) out[j] += mass[i] * m;
    }
  }
}

nlohmann::json DiscreteKernel::summary() const {
  double max_defect = 0.0, center_defect = 0.0;
  const std::size_t c = lattice_.center();
  for (std::size_t i = 0; i < rates_.size(); ++i) max_defect = std::max(max_defect, rates_[i] - row_sums_[i]);
  center_defect = rates_[c] - row_sums_[c];
  return {{"lattice", lattice_.to_json()},
          {"storage", stencil_.empty() ? "dense" : "stencil"},
          {"b_bar", b_bar()},
          {"center_row_sum", row_sums_[c]},
          {"center_rate", rates_[c]},
          {"center_box_defect", center_defect},
          {"max_box_defect", max_defect}};
}

DiscreteKernel discretize_kernel(const TruncationContext& ctx, const Lattice& lattice, const DiscretizeOptions& options) {
  const JumpKernel& kernel = ctx.kernel();
  if (kernel.dim() != lattice.dim()) throw LatticeMismatchError("discretize_kernel: kernel and lattice dimensions differ");
  if (!(lattice.spacing() < ctx.eps())) {
    throw ResolutionError("discretize_kernel: spacing " + std::to_string(lattice.spacing()) +
                          " does not resolve eps " + std::to_string(ctx.eps()));
  }
  const std::size_t N = lattice.size();
  if (N > options.max_nodes) {
    throw BudgetError("discretize_kernel: " + std::to_string(N) + " nodes exceed the budget of " +
                      std::to_string(options.max_nodes));
  }
  const bool invariant = kernel.traits().translation_invariant;
  if (!invariant && N * N > options.max_dense_entries) {
    throw BudgetError("discretize_kernel: dense storage of " + std::to_string(N * N) + " entries exceeds the budget");
  }

  DiscreteKernel dk(ctx, lattice);
  const double alpha = kernel.alpha();
  const int d = kernel.dim();
  cell_tables(lattice, ctx.eps(), alpha, dk.trunc_cells_, dk.full_cells_);
  const std::size_t slots = dk.trunc_cells_.size();

  // Product-integration factor |offset|^{alpha+d} * cell integral.
  std::vector<double> rho(slots, 0.0);
  for (std::size_t s = 0; s < slots; ++s) {
    if (dk.trunc_cells_[s] == 0.0) continue;
    rho[s] = std::pow(norm(offset_point(lattice, s)), alpha + d) * dk.trunc_cells_[s];
  }

  if (invariant) {
    dk.stencil_.assign(slots, 0.0);
    for (std::size_t s = 0; s < slots; ++s) {
      if (rho[s] > 0.0) dk.stencil_[s] = kernel.raw(Point{}, offset_point(lattice, s)) * rho[s];
    }
  } else {
    dk.dense_.assign(N * N, 0.0);
    detail::parallel_for(N, [&](std::size_t i) {
      const Point xi = lattice.point(i);
      for (std::size_t j = 0; j < N; ++j) {
        const double r = rho[dk.offset_index(i, j)];
        if (r > 0.0) dk.dense_[i * N + j] = kernel.raw(xi, lattice.point(j)) * r;
      }
    });
  }

  // Continuum rates at the nodes.
  dk.rates_.assign(N, 0.0);
  dk.rate_errors_.assign(N, 0.0);
  if (invariant) {
    RateEstimate b = ctx.b_eps(Point{});
    std::fill(dk.rates_.begin(), dk.rates_.end(), b.value);
    std::fill(dk.rate_errors_.begin(), dk.rate_errors_.end(), b.quad_error);
  } else {
    detail::parallel_for(N, [&](std::size_t i) {
      RateEstimate b = ctx.b_eps(lattice.point(i));
      dk.rates_[i] = b.value;
      dk.rate_errors_[i] = b.quad_error;
    });
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (dk.rates_[i] > ctx.b_bar() * (1.0 + 1e-12)) {
      throw PreconditionError("discretize_kernel: b_eps at node " + std::to_string(i) + " (" +
                              std::to_string(dk.rates_[i]) + ") exceeds b_bar " + std::to_string(ctx.b_bar()) +
                              "; sample this region when building the context");
    }
  }

  // Row sums, out-of-box bounds and boundary lumps.
  dk.row_sums_.assign(N, 0.0);
  dk.out_bounds_.assign(N, 0.0);
  dk.lumps_.assign(N, {});
  const auto dirs = sphere_directions(d, ctx.quad().n_angles);
  const double R = lattice.half_width();
  detail::parallel_for(N, [&](std::size_t i) {
    std::vector<double> buffer(N);
    dk.row(i, buffer);
    double rs = 0.0;
    for (double v : buffer) rs += v;
    dk.row_sums_[i] = rs;

    const Point xi = lattice.point(i);
    std::map<std::size_t, double> share;
    double env_total = 0.0, share_total = 0.0;
    std::map<std::size_t, double> env_share;
    for (const auto& dir : dirs) {
      double exit = std::numeric_limits<double>::infinity();
      for (int k = 0; k < d; ++k) {
        if (dir.u[k] > 0.0) exit = std::min(exit, (R - xi[k]) / dir.u[k]);
        if (dir.u[k] < 0.0) exit = std::min(exit, (-R - xi[k]) / dir.u[k]);
      }
      const double r = std::max(exit, ctx.eps());
      const double env = dir.weight * kernel.M() * std::pow(r, -alpha) / alpha;
      const std::size_t target = lattice.nearest(xi + (exit * (1.0 - 1e-9)) * dir.u);
      env_total += env;
      env_share[target] += env;
      const double beyond = kernel.raw(xi, xi + (r * (1.0 + 1e-9)) * dir.u) * std::pow(r, alpha + d) / kernel.M();
      share[target] += env * std::max(0.0, beyond);
      share_total += env * std::max(0.0, beyond);
    }
    dk.out_bounds_[i] = env_total;
    const double residual = std::max(0.0, dk.rates_[i] - rs);
    if (residual > 0.0) {
      const auto& weights = share_total > 0.0 ? share : env_share;
      const double total = share_total > 0.0 ? share_total : env_total;
      for (const auto& [j, s] : weights) {
        if (s > 0.0) dk.lumps_[i].emplace_back(j, residual * s / total);
      }
    }
  });
  return dk;
}

// --- iterated kernels ----------------------------------------------------------

double IteratedKernel::grid_mass() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

std::vector<IteratedKernel> iterate_kernels(const DiscreteKernel& kernel, std::size_t source, int max_order,
                                            const IterationOptions& options) {
  const std::size_t N = kernel.lattice().size();
  if (source >= N) throw PreconditionError("iterate_kernels: source node outside lattice");
  if (max_order < 1) throw PreconditionError("iterate_kernels: max order must be >= 1");
  const double b_bar = kernel.b_bar();
  if (!(b_bar > 0.0)) throw PreconditionError("iterate_kernels: b_bar must be positive");
  const auto rates = kernel.rates();
  const auto errs = kernel.rate_errors();
  const auto bounds = kernel.out_of_box_bounds();
  const double q = 1.0 - rates[source] / b_bar;

  // Per-node error bar of b_eps - (row sum + lumps).
  std::vector<double> bar_rate(N);
  for (std::size_t i = 0; i < N; ++i) {
    bar_rate[i] = errs[i] + (options.mode == BoundaryMode::absorbing ? bounds[i] : 0.0);
  }

  std::vector<IteratedKernel> out;
  out.reserve(static_cast<std::size_t>(max_order));

  std::vector<double> delta(N, 0.0);
  delta[source] = 1.0;
  std::vector<double> first(N);
  kernel.push(delta, first, options.mode);
  for (double& v : first) v /= b_bar;

  IteratedKernel current;
  current.source = source;
  current.order = 1;
  current.mass = first;
  current.atom_weight = q;
  current.leakage_bar = bar_rate[source] / b_bar;

  std::vector<double> pushed(N);
  for (int n = 1;; ++n) {
    current.raw_defect = (1.0 - current.atom_weight) - current.grid_mass();
    current.breach = mass_identity_defect(current) > options.tolerance;
    out.push_back(current);
    if (n == max_order) break;

    const double qn = current.atom_weight;
    IteratedKernel next;
    next.source = source;
    next.order = n + 1;
    next.mass.assign(N, 0.0);
    kernel.push(current.mass, pushed, options.mode);
    double bar_increment = qn * bar_rate[source];
    for (std::size_t y = 0; y < N; ++y) {
      next.mass[y] = pushed[y] / b_bar + (1.0 - rates[y] / b_bar) * current.mass[y] + qn * first[y];
      bar_increment += current.mass[y] * bar_rate[y];
    }
    next.atom_weight = qn * q;
    next.leakage_bar = current.leakage_bar + bar_increment / b_bar;
    current = std::move(next);
  }
  return out;
}

double mass_identity_defect(const IteratedKernel& iterated) {
  const double target = 1.0 - iterated.atom_weight;
  const double raw = std::abs(target - iterated.grid_mass());
  return std::max(0.0, raw - iterated.leakage_bar);
}

}  // namespace stabledom
