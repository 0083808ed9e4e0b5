#include "stabledom/semigroup.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stabledom/errors.hpp"
#include "stabledom/sampling.hpp"

namespace stabledom {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

// Grid row mass plus boundary lumps of every node.
std::vector<double> row_masses(const DiscreteKernel& kernel, BoundaryMode mode) {
  const auto rs = kernel.row_sums();
  std::vector<double> out(rs.begin(), rs.end());
  if (mode == BoundaryMode::lumped) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (const auto& [j, m] : kernel.lumps(i)) out[i] += m;
    }
  }
  return out;
}

// Atom weights b_bar - (kernel mass) per node.
std::vector<double> atoms(const DiscreteKernel& kernel, BoundaryMode mode, double b_bar) {
  std::vector<double> out;
  if (mode == BoundaryMode::lumped) {
    out = row_masses(kernel, mode);
  } else {
    const auto r = kernel.rates();
    out.assign(r.begin(), r.end());
  }
  for (double& v : out) v = b_bar - v;
  return out;
}

void check_lattice(const DiscreteKernel& kernel, const Field& phi) {
  if (!(kernel.lattice() == phi.lattice())) throw LatticeMismatchError("field and kernel lattices differ");
}

// Integrates g over [a, b] in panels of width at most `width`.
template <typename F>
double panel_integral(F&& g, double a, double b, double width, double tol, double* error = nullptr) {
  if (!(b > a)) return 0.0;
  const int count = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
  const double step = (b - a) / count;
  double sum = 0.0, err = 0.0;
  for (int p = 0; p < count; ++p) {
    double lo = a + p * step;
    double hi = p + 1 == count ? b : lo + step;
    double e = 0.0;
    sum += GK::integrate(g, lo, hi, 15, tol, &e);
    err += e;
  }
  if (error) *error = err;
  return sum;
}

}  // namespace

PoissonWindow poisson_window(double lambda, double tol, std::size_t max_terms) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PreconditionError("poisson_window: invalid rate");
  PoissonWindow w;
  if (lambda == 0.0) {
    w.weights = {1.0};
    return w;
  }
  const auto mode = static_cast<std::size_t>(std::floor(lambda));
  const double log_mode = -lambda + mode * std::log(lambda) - std::lgamma(static_cast<double>(mode) + 1.0);
  std::vector<double> left, right{std::exp(log_mode)};
  double total = right[0];
  std::size_t lo = mode, hi = mode;
  double next_left = lo > 0 ? right[0] * lo / lambda : 0.0;
  double next_right = right[0] * lambda / (hi + 1);
  while (1.0 - total > tol && (next_left > 0.0 || next_right > 0.0)) {
    if (hi - lo + 1 >= max_terms || hi + 1 >= max_terms) {
      throw SeriesTruncationError("poisson_window: more than " + std::to_string(max_terms) +
                                  " terms needed for rate " + std::to_string(lambda));
    }
    if (next_left >= next_right) {
      left.push_back(next_left);
      total += next_left;
      --lo;
      next_left = lo > 0 ? next_left * lo / lambda : 0.0;
    } else {
      right.push_back(next_right);
      total += next_right;
      ++hi;
      next_right = next_right * lambda / (hi + 1);
    }
  }
  w.first = lo;
  w.last = hi;
  w.weights.assign(left.rbegin(), left.rend());
  w.weights.insert(w.weights.end(), right.begin(), right.end());
  w.tail = std::max(0.0, 1.0 - total);
  return w;
}

Field apply_gamma(const DiscreteKernel& kernel, const Field& phi, BoundaryMode mode) {
  check_lattice(kernel, phi);
  Field out(phi.lattice());
  kernel.apply(phi.values(), out.values(), mode);
  const auto atom = atoms(kernel, mode, kernel.b_bar());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += atom[i] * phi[i];
  return out;
}

Field apply_generator(const DiscreteKernel& kernel, const Field& phi, BoundaryMode mode) {
  Field out = apply_gamma(kernel, phi, mode);
  const double b = kernel.b_bar();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b * phi[i];
  return out;
}

nlohmann::json SemigroupEvaluation::summary() const {
  return {{"t", t}, {"b_bar", b_bar}, {"order", order}, {"tail", tail}, {"sup_norm", result.sup_norm()}};
}

SemigroupEvaluation apply_semigroup(const DiscreteKernel& kernel, const Field& phi, double t,
                                    const SeriesOptions& options) {
  return apply_semigroup(kernel, phi, std::span<const double>(&t, 1), options).front();
}

std::vector<SemigroupEvaluation> apply_semigroup(const DiscreteKernel& kernel, const Field& phi,
                                                 std::span<const double> times, const SeriesOptions& options) {
  check_lattice(kernel, phi);
  double b_bar = options.b_bar > 0.0 ? options.b_bar : kernel.b_bar();
  const auto masses = options.mode == BoundaryMode::lumped ? row_masses(kernel, options.mode)
                                                            : std::vector<double>(kernel.rates().begin(),
                                                                                  kernel.rates().end());
  for (double m : masses) b_bar = std::max(b_bar, m);
  std::vector<double> atom(masses.size());
  for (std::size_t i = 0; i < atom.size(); ++i) atom[i] = b_bar - masses[i];

  std::vector<PoissonWindow> windows;
  std::vector<SemigroupEvaluation> out;
  std::size_t last = 0;
  for (double t : times) {
    if (!(t >= 0.0)) throw PreconditionError("apply_semigroup: t must be >= 0");
    windows.push_back(poisson_window(t * b_bar, options.tail_tol, options.max_terms));
    last = std::max(last, windows.back().last);
    SemigroupEvaluation ev{t, b_bar, windows.back().last, windows.back().tail, Field(phi.lattice())};
    out.push_back(std::move(ev));
  }

  const std::size_t N = phi.size();
  std::vector<double> v(phi.values().begin(), phi.values().end()), next(N);
  for (std::size_t n = 0;; ++n) {
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const double w = windows[k].weight(n);
      if (w == 0.0) continue;
      auto r = out[k].result.values();
      for (std::size_t i = 0; i < N; ++i) r[i] += w * v[i];
    }
    if (n == last) break;
    kernel.apply(v, next, options.mode);
    for (std::size_t i = 0; i < N; ++i) next[i] = (next[i] + atom[i] * v[i]) / b_bar;
    v.swap(next);
  }
  // t = 0 returns phi bit for bit.
  for (auto& ev : out) {
    if (ev.t == 0.0) ev.result = phi;
  }
  return out;
}

// --- bumps and the limit generator ------------------------------------------------

Bump Bump::gaussian(Point center, double scale, double amplitude) {
  if (!(scale > 0.0)) throw PreconditionError("Bump: scale must be positive");
  return Bump{Kind::gaussian, center, scale, amplitude};
}

Bump Bump::constant(double value) { return Bump{Kind::constant, Point{}, 1.0, value}; }

double Bump::value(const Point& x) const {
  if (kind == Kind::constant) return amplitude;
  const Point z = x - center;
  return amplitude * std::exp(-0.5 * dot(z, z) / (scale * scale));
}

Point Bump::gradient(const Point& x) const {
  if (kind == Kind::constant) return Point{};
  return (-value(x) / (scale * scale)) * (x - center);
}

double Bump::curvature(const Point& x, const Point& u) const {
  if (kind == Kind::constant) return 0.0;
  const double s2 = scale * scale;
  const double zu = dot(x - center, u);
  return value(x) * (zu * zu / (s2 * s2) - dot(u, u) / s2);
}

double Bump::support_radius() const { return kind == Kind::constant ? 0.0 : scale * std::sqrt(2.0 * std::log(1e17)); }

double truncated_generator(const JumpKernel& kernel, const Bump& phi, const Point& x, double eps, int n_angles) {
  if (!(eps > 0.0)) throw PreconditionError("truncated_generator: eps must be positive");
  if (phi.kind == Bump::Kind::constant) return 0.0;
  const int d = kernel.dim();
  const double phix = phi.value(x);
  const double r_out = std::max(eps, distance(x, phi.center) + phi.support_radius());
  double total = 0.0;
  for (const auto& dir : sphere_directions(d, n_angles)) {
    auto near = [&](double s) {
      const double r = std::exp(s);
      const Point y = x + r * dir.u;
      return (phi.value(y) - phix) * kernel.raw(x, y) * std::pow(r, d);
    };
    // Panels fine enough to resolve the bump on a log scale.
    const double width = std::min(0.1, phi.scale / r_out);
    total += dir.weight * panel_integral(near, std::log(eps), std::log(r_out), width, 1e-12);
  }
  // Beyond r_out phi is flat, so the far part is (far - phi(x)) b_{r_out}(x).
  if (phix != phi.far_value()) total += (phi.far_value() - phix) * rate_integral(kernel, r_out, x).value;
  return total;
}

namespace {

// int_{|h| < eps} (phi(x+h) - phi(x)) f(x, x+h) dh with paired antipodal rays.
double small_ball(const JumpKernel& kernel, const Bump& phi, const Point& x, double eps, int n_angles) {
  if (phi.kind == Bump::Kind::constant) return 0.0;
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  const bool sym = kernel.traits().sym_h;
  const auto dirs = sphere_directions(d, n_angles);
  const std::size_t half = dirs.size() / 2;
  const double phix = phi.value(x);
  const Point grad = phi.gradient(x);
  const double r_taylor = 1e-3 * phi.scale;
  // Below r_floor the offset x + r u loses precision; the kernel is extended
  // from r_floor by the homogeneity of the envelope.
  const double r_floor = std::min(r_taylor, 1e-8 * std::max(1.0, norm(x)));
  const double power = alpha + d;
  const double decay = sym ? 2.0 - alpha : 1.0 - alpha;
  const double depth = std::min(400.0, 40.0 / decay);
  double total = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const Point u = dirs[k].u;
    const double curv = phi.curvature(x, u);
    const double slope = dot(grad, u);
    auto integrand = [&](double s) {
      const double r = std::exp(s);
      const double re = std::max(r, r_floor);
      const double scale = re == r ? 1.0 : std::pow(re / r, power);
      const Point yp = x + r * u;
      const Point ym = x - r * u;
      const double fp = kernel.raw(x, x + re * u) * scale;
      const double fm = sym ? fp : kernel.raw(x, x - re * u) * scale;
      double value;
      if (r < r_taylor) {
        const double odd = sym ? 0.0 : r * slope * (fp - fm);
        value = odd + 0.5 * r * r * curv * (fp + fm);
      } else {
        value = (phi.value(yp) - phix) * fp + (phi.value(ym) - phix) * fm;
      }
      return value * std::pow(r, d);
    };
    // Breakpoints where the integrand switches formula.
    const double hi = std::log(eps);
    const double lo = hi - depth;
    const double b1 = std::clamp(std::log(r_floor), lo, hi);
    const double b2 = std::clamp(std::log(r_taylor), lo, hi);
    total += dirs[k].weight * (panel_integral(integrand, lo, b1, 1.0, 1e-12) +
                               panel_integral(integrand, b1, b2, 1.0, 1e-12) +
                               panel_integral(integrand, b2, hi, 1.0, 1e-12));
  }
  return total;
}

}  // namespace

double limit_generator(const JumpKernel& kernel, const Bump& phi, const Point& x, int n_angles) {
  const double eps0 = std::min(1.0, phi.scale);
  return truncated_generator(kernel, phi, x, eps0, n_angles) + small_ball(kernel, phi, x, eps0, n_angles);
}

nlohmann::json LimitGeneratorResult::to_json() const {
  return {{"eps", eps},
          {"sup_difference", sup_difference},
          {"limit", limit},
          {"slope", slope},
          {"expected_slope", expected_slope}};
}

LimitGeneratorResult apply_limit_generator(const JumpKernel& kernel, const Bump& phi, std::span<const Point> points,
                                           std::span<const double> eps_sweep, int n_angles) {
  if (eps_sweep.size() < 4) throw PreconditionError("apply_limit_generator: need at least four eps values");
  if (!kernel.traits().sym_h && !(kernel.alpha() < 1.0)) {
    throw PreconditionError("apply_limit_generator: kernel must be sym_h or have alpha < 1");
  }
  if (points.empty()) throw PreconditionError("apply_limit_generator: no evaluation points");
  LimitGeneratorResult res;
  res.eps.assign(eps_sweep.begin(), eps_sweep.end());
  res.points.assign(points.begin(), points.end());
  res.expected_slope = kernel.traits().sym_h ? 2.0 - kernel.alpha() : 1.0 - kernel.alpha();
  for (const auto& x : points) res.limit.push_back(limit_generator(kernel, phi, x, n_angles));
  for (double eps : res.eps) {
    std::vector<double> row;
    double sup = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      row.push_back(truncated_generator(kernel, phi, points[i], eps, n_angles));
      sup = std::max(sup, std::abs(res.limit[i] - row.back()));
    }
    res.approx.push_back(std::move(row));
    res.sup_difference.push_back(sup);
  }
  // Least-squares slope in log-log coordinates.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < res.eps.size(); ++k) {
    if (!(res.sup_difference[k] > 0.0)) continue;
    const double lx = std::log(res.eps[k]), ly = std::log(res.sup_difference[k]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  res.slope = m >= 2 && den > 0.0 ? (m * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
  return res;
}

}  // namespace stabledom
