#include "stabledom/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parallel.hpp"
#include "stabledom/errors.hpp"
#include "stabledom/sampling.hpp"

namespace stabledom {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json point_json(const Point& p, int dim) {
  auto j = nlohmann::json::array();
  for (int k = 0; k < dim; ++k) j.push_back(p[k]);
  return j;
}

struct Quadrature {
  double value = 0.0;
  double error = 0.0;
};

Quadrature subharmonic_quadrature(const JumpKernel& kernel, const SubharmonicitySample& s, double kappa, int n_angles,
                                  double rel_tol) {
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  const double rho = kappa * distance(s.x, s.y);
  Quadrature q;
  if (rho <= s.eps) return q;
  const double lo = std::log(s.eps), hi = std::log(rho);
  const int panels = std::max(4, static_cast<int>(std::ceil((hi - lo) / 0.5)));
  for (const auto& dir : sphere_directions(d, n_angles)) {
    auto g = [&](double v) {
      const double r = std::exp(v);
      const Point z = s.y + r * dir.u;
      return std::pow(distance(z, s.x), -alpha - d) * kernel.raw(s.y, z) * std::pow(r, d);
    };
    const double step = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      double e = 0.0;
      const double a = lo + p * step;
      const double b = p + 1 == panels ? hi : a + step;
      q.value += dir.weight * GK::integrate(g, a, b, 20, rel_tol, &e);
      q.error += dir.weight * e;
    }
  }
  return q;
}

double max_upward_drift(const std::vector<double>& c, int from, int to) {
  double drift = 0.0;
  const int last = std::min<int>(to, static_cast<int>(c.size()));
  for (int n1 = from; n1 <= last; ++n1) {
    for (int n2 = n1 + 1; n2 <= last; ++n2) {
      if (c[n1 - 1] > 0.0) drift = std::max(drift, c[n2 - 1] / c[n1 - 1] - 1.0);
    }
  }
  return drift;
}

double bound_kernel(double r, double t, double alpha, int d) {
  const double near = std::pow(t, -d / alpha);
  if (r <= 0.0) return near;
  return std::min(near, t * std::pow(r, -alpha - d));
}

}  // namespace

// --- subharmonicity -------------------------------------------------------------

std::vector<SubharmonicitySample> default_subharmonicity_samples(int dim, int count, std::span<const double> eps_set,
                                                                  double box, double min_gap) {
  if (eps_set.empty()) throw PreconditionError("default_subharmonicity_samples: empty eps set");
  if (dim < 1 || dim > kMaxDim) throw PreconditionError("default_subharmonicity_samples: invalid dimension");
  static constexpr unsigned kBases[2 * kMaxDim] = {2, 3, 5, 7, 11, 13};
  std::vector<SubharmonicitySample> out;
  for (unsigned long long i = 1; static_cast<int>(out.size()) < count && i < 1000000; ++i) {
    SubharmonicitySample s;
    for (int k = 0; k < dim; ++k) {
      s.x[k] = -box + 2.0 * box * radical_inverse(i, kBases[k]);
      s.y[k] = -box + 2.0 * box * radical_inverse(i, kBases[dim + k]);
    }
    if (distance(s.x, s.y) < min_gap) continue;
    s.eps = eps_set[out.size() % eps_set.size()];
    out.push_back(s);
  }
  return out;
}

double subharmonic_integral(const JumpKernel& kernel, const SubharmonicitySample& s, double kappa, int n_angles,
                            double rel_tol) {
  if (distance(s.x, s.y) == 0.0) throw PreconditionError("subharmonic_integral: x and y coincide");
  return subharmonic_quadrature(kernel, s, kappa, n_angles, rel_tol).value;
}

SubharmonicityResult check_subharmonicity(const JumpKernel& kernel, std::span<const SubharmonicitySample> samples,
                                          const SubharmonicityOptions& options) {
  if (samples.empty()) throw PreconditionError("check_subharmonicity: no samples");
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  std::vector<double> rhs(samples.size()), rhs_err(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double gap = distance(s.x, s.y);
    if (gap == 0.0) throw PreconditionError("check_subharmonicity: sample with x == y");
    if (!(s.eps > 0.0)) throw PreconditionError("check_subharmonicity: eps must be positive");
    const RateEstimate b = rate_integral(kernel, s.eps, s.y);
    rhs[i] = b.value * std::pow(gap, -alpha - d);
    rhs_err[i] = b.quad_error * std::pow(gap, -alpha - d);
  }
  auto evaluate = [&](double kappa, std::vector<double>& ratios) {
    ratios.assign(samples.size(), 0.0);
    bool ok = true;
    detail::parallel_for(samples.size(), [&](std::size_t i) {
      const Quadrature q = subharmonic_quadrature(kernel, samples[i], kappa, options.n_angles, options.rel_tol);
      ratios[i] = q.value / rhs[i];
      if (q.value - q.error > rhs[i] + rhs_err[i]) {
#pragma omp atomic write
        ok = false;
      }
    });
    return ok;
  };

  std::vector<double> ratios;
  double lo = 0.0, hi = options.kappa_max;
  if (evaluate(hi, ratios)) {
    lo = hi;
  } else {
    for (int step = 0; step < options.bisection_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      (evaluate(mid, ratios) ? lo : hi) = mid;
    }
  }
  evaluate(lo, ratios);

  SubharmonicityResult res;
  res.kappa = lo;
  BoundReport& r = res.report;
  r.check = "subharmonicity";
  const auto worst = std::max_element(ratios.begin(), ratios.end());
  r.worst_ratio = worst == ratios.end() ? 0.0 : *worst;
  r.fitted_constant = r.worst_ratio;
  r.declared_constant = 1.0;
  r.pass = res.kappa >= options.kappa_min && r.worst_ratio <= 1.0 + 1e-9;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    r.configurations.push_back({{"kernel", kernel.name()},
                                {"x", point_json(samples[i].x, d)},
                                {"y", point_json(samples[i].y, d)},
                                {"eps", samples[i].eps},
                                {"ratio", ratios[i]}});
  }
  r.metrics = {{"kappa", res.kappa}, {"kappa_min", options.kappa_min}, {"samples", samples.size()}};
  r.notes = "bisection over kappa; a sample fails only when LHS exceeds RHS by more than both quadrature errors";
  return res;
}

// --- iterated kernel estimates ----------------------------------------------------

int estimate3_n0(double ratio, double d_over_alpha) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw PreconditionError("estimate3_n0: a/A must lie in (0, 1]");
  auto holds = [&](int n) {
    return std::pow(1.0 - ratio, n) * std::pow(n + 1.0, d_over_alpha) < 1.0 / (n + 1.0);
  };
  // The left side times (n+1) is eventually decreasing; scan well past its maximum.
  const int horizon = 100 + static_cast<int>(std::ceil(40.0 * (d_over_alpha + 1.0) / std::max(ratio, 1e-6)));
  int last_failure = 0;
  for (int n = 1; n <= horizon; ++n) {
    if (!holds(n)) last_failure = n;
  }
  return last_failure + 1;
}

double estimate3_p(int dim, double alpha) {
  const double q = dim / alpha;
  return dim * std::pow(2.0, std::max(q, 1.0) - 1.0) / alpha;
}

double estimate3_eta(double ratio, double p, double alpha) {
  return std::pow(ratio * ratio / (2.0 * (1.0 + p)), 1.0 / alpha);
}

std::vector<double> estimate_constants(const DiscreteKernel& kernel, std::span<const IteratedKernel> iterated,
                                       int which) {
  if (which < 1 || which > 3) throw PreconditionError("estimate_constants: which must be 1, 2 or 3");
  const Lattice& lat = kernel.lattice();
  const double w = lat.weight();
  const double b_bar = kernel.b_bar();
  const double q = static_cast<double>(lat.dim()) / kernel.context().kernel().alpha();
  const double scale = std::pow(b_bar, q);
  std::vector<double> out;
  for (const auto& it : iterated) {
    const double n = it.order;
    double c = 0.0;
    for (std::size_t j = 0; j < it.mass.size(); ++j) {
      const double m = it.mass[j];
      if (!(m > 0.0)) continue;
      double ratio = 0.0;
      if (which == 1) {
        if (j == it.source) continue;
        ratio = m * b_bar / (n * kernel.envelope_cell_integral(it.source, j, false));
      } else if (which == 2) {
        ratio = (m / w) / (scale * (1.0 - it.atom_weight));
      } else {
        ratio = (m / w) * std::pow(n, q) / scale;
      }
      c = std::max(c, ratio);
    }
    out.push_back(c);
  }
  return out;
}

BoundReport check_estimates(const DiscreteKernel& kernel, std::span<const IteratedKernel> iterated, int which,
                            const EstimateOptions& options) {
  const JumpKernel& k = kernel.context().kernel();
  const int d = kernel.lattice().dim();
  const double alpha = k.alpha();
  BoundReport r;
  r.check = "estimate" + std::to_string(which);
  const auto c = estimate_constants(kernel, iterated, which);
  bool breach = false;
  for (const auto& it : iterated) breach = breach || it.breach;
  bool finite = !c.empty();
  for (double v : c) finite = finite && std::isfinite(v);
  r.fitted_constant = c.empty() ? 0.0 : *std::max_element(c.begin(), c.end());
  const double drift = max_upward_drift(c, options.drift_from, options.drift_to);

  bool base_ok = true;
  double base = std::numeric_limits<double>::quiet_NaN();
  if (which == 1) base = k.M();
  if (which == 2) base = k.M() * std::pow(k.a(), -static_cast<double>(d) / alpha - 1.0);
  if (!c.empty() && std::isfinite(base)) base_ok = c.front() <= base * (1.0 + 1e-12);
  r.declared_constant = base;
  r.worst_ratio = std::isfinite(base) && !c.empty() ? c.front() / base : drift;
  r.pass = finite && !breach && base_ok && drift < options.max_drift;
  for (std::size_t i = 0; i < c.size(); ++i) {
    r.configurations.push_back({{"kernel", k.name()},
                                {"eps", kernel.context().eps()},
                                {"n", iterated[i].order},
                                {"x", point_json(kernel.lattice().point(iterated[i].source), d)},
                                {"C_n", c[i]}});
  }
  r.metrics = {{"constants", c},
               {"drift", drift},
               {"drift_range", {options.drift_from, options.drift_to}},
               {"max_drift", options.max_drift},
               {"base_constant", base},
               {"base_ok", base_ok},
               {"mass_identity_breach", breach}};
  if (which == 3) {
    const double ratio = std::min(1.0, k.a() / k.rate_constant());
    const double p = estimate3_p(d, alpha);
    r.metrics["n0"] = estimate3_n0(ratio, d / alpha);
    r.metrics["p"] = p;
    r.metrics["eta"] = estimate3_eta(ratio, p, alpha);
  }
  r.notes = "cell-integrated ratios; base constant asserted at n = 1 where declared";
  return r;
}

BoundReport check_mass_identity(std::span<const IteratedKernel> iterated, double tolerance) {
  BoundReport r;
  r.check = "mass_identity";
  r.declared_constant = tolerance;
  r.pass = !iterated.empty();
  double worst = 0.0;
  for (const auto& it : iterated) {
    const double defect = mass_identity_defect(it);
    worst = std::max(worst, defect);
    r.configurations.push_back({{"n", it.order},
                                {"raw_defect", it.raw_defect},
                                {"leakage_bar", it.leakage_bar},
                                {"defect", defect}});
  }
  r.fitted_constant = worst;
  r.worst_ratio = worst / tolerance;
  r.pass = r.pass && worst < tolerance;
  r.notes = "defect beyond the accumulated leakage and quadrature bar, normalized by b_bar^n";
  return r;
}

// --- series lemma ---------------------------------------------------------------

double series_sum(double x, double p) {
  if (!(x > 0.0) || !(p >= 0.0)) throw PreconditionError("series_sum: need x > 0 and p >= 0");
  const double lx = std::log(x);
  double sum = 0.0;
  for (int n = 1; n < 100000; ++n) {
    const double term = std::exp((n + p) * lx - std::lgamma(n + 1.0) - p * std::log(static_cast<double>(n)));
    sum += term;
    const double r = x / (n + 1.0);  // bounds the ratio of consecutive terms once n + 1 > x
    if (r < 1.0 && term * r / (1.0 - r) < 1e-12 * sum) break;
  }
  return sum;
}

BoundReport check_series_lemma(std::span<const double> p_set, std::span<const double> x_set) {
  if (p_set.empty() || x_set.empty()) throw PreconditionError("check_series_lemma: empty sweep");
  BoundReport r;
  r.check = "series_lemma";
  r.pass = true;
  nlohmann::json per_p = nlohmann::json::array();
  for (double p : p_set) {
    double c = 0.0, argmax = 0.0;
    for (double x : x_set) {
      const double ratio = series_sum(x, p) / series_sum(x, 0.0);
      if (ratio > c) c = ratio, argmax = x;
    }
    const bool finite = std::isfinite(c);
    bool ok = finite;
    double envelope = std::numeric_limits<double>::quiet_NaN();
    if (p == 0.0) ok = ok && c == 1.0;
    if (p <= 1.0) {
      envelope = std::pow(2.0, p);
      ok = ok && c <= envelope;
    }
    r.pass = r.pass && ok;
    r.fitted_constant = std::max(r.fitted_constant, c);
    if (std::isfinite(envelope)) r.worst_ratio = std::max(r.worst_ratio, c / envelope);
    per_p.push_back({{"p", p}, {"C", c}, {"argmax_x", argmax}, {"envelope", envelope}, {"pass", ok}});
    r.configurations.push_back({{"p", p}, {"C", c}});
  }
  r.metrics = {{"per_p", per_p}, {"x_count", x_set.size()}};
  r.notes = "C(0) must equal 1; C(p) <= 2^p for p in (0, 1]; finite otherwise";
  return r;
}

// --- semigroup bound -------------------------------------------------------------

double TestFunction::operator()(const Point& x) const {
  const double r = distance(x, center);
  if (kind == Kind::indicator) return r <= width ? height : 0.0;
  return height * std::exp(-0.5 * r * r / (width * width));
}

bool TestFunction::supports(const Point& x) const {
  const double r = distance(x, center);
  return kind == Kind::indicator ? r <= width : r <= 6.0 * width;
}

nlohmann::json TestFunction::to_json() const {
  return {{"name", name},
          {"kind", kind == Kind::bump ? "bump" : "indicator"},
          {"center", point_json(center, kMaxDim)},
          {"width", width},
          {"height", height}};
}

TestFunction test_function_from_json(const nlohmann::json& j) {
  try {
    TestFunction f;
    f.name = j.value("name", std::string("phi"));
    const std::string kind = j.value("kind", std::string("bump"));
    if (kind == "bump") {
      f.kind = TestFunction::Kind::bump;
    } else if (kind == "indicator") {
      f.kind = TestFunction::Kind::indicator;
    } else {
      throw ConfigError("test function: unknown kind '" + kind + "'");
    }
    if (j.contains("center")) {
      const auto& c = j.at("center");
      if (c.is_number()) {
        f.center[0] = c.get<double>();
      } else {
        for (std::size_t k = 0; k < c.size() && k < static_cast<std::size_t>(kMaxDim); ++k) f.center[k] = c[k].get<double>();
      }
    }
    f.width = j.value("width", 1.0);
    f.height = j.value("height", 1.0);
    if (!(f.width > 0.0) || !(f.height >= 0.0)) throw ConfigError("test function: width must be > 0 and height >= 0");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("test function: ") + e.what());
  }
}

std::vector<TestFunction> default_test_functions(int dim) {
  (void)dim;
  return {
      {"bump_0", TestFunction::Kind::bump, Point{0.0}, 1.0, 1.0},
      {"bump_3", TestFunction::Kind::bump, Point{3.0}, 0.5, 1.0},
      {"indicator_center", TestFunction::Kind::indicator, Point{0.0}, 0.5, 1.0},
      {"indicator_1_2", TestFunction::Kind::indicator, Point{1.5}, 0.5, 1.0},
  };
}

BoundReport check_main_theorem(const JumpKernel& kernel, std::span<const TestFunction> functions,
                               const MainTheoremOptions& options) {
  if (functions.empty() || options.eps.empty() || options.times.empty()) {
    throw PreconditionError("check_main_theorem: empty sweep");
  }
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  BoundReport r;
  r.check = "main_theorem";
  std::vector<double> fitted;
  nlohmann::json per_eps = nlohmann::json::array();
  bool finite = true;
  for (double eps : options.eps) {
    const TruncationContext ctx = make_context(kernel, eps, options.context);
    const Lattice lat(d, options.half_width, options.points_per_axis);
    const DiscreteKernel dk = discretize_kernel(ctx, lat, options.discretize);
    const auto rates = dk.rates();
    double c_eps = 0.0, c_near = 0.0, c_far = 0.0;
    std::size_t guarded = 0;
    for (const auto& phi : functions) {
      const Field field = Field::sample(lat, [&](const Point& y) { return phi(y); });
      const auto evals = apply_semigroup(dk, field, options.times, options.series);
      for (const auto& ev : evals) {
        const double t = ev.t;
        for (const Point& p : options.points) {
          const std::size_t i = lat.nearest(p);
          const Point x = lat.point(i);
          const double lhs = ev.result[i] - std::exp(-t * rates[i]) * field[i];
          double rhs = 0.0;
          for (std::size_t j = 0; j < lat.size(); ++j) {
            if (field[j] != 0.0) rhs += field[j] * lat.weight() * bound_kernel(distance(x, lat.point(j)), t, alpha, d);
          }
          if (!(rhs > 1e-300)) {
            ++guarded;
            continue;
          }
          const double ratio = lhs / rhs;
          c_eps = std::max(c_eps, ratio);
          (phi.supports(x) ? c_near : c_far) = std::max(phi.supports(x) ? c_near : c_far, ratio);
          r.configurations.push_back({{"kernel", kernel.name()},
                                      {"eps", eps},
                                      {"phi", phi.name},
                                      {"t", t},
                                      {"x", point_json(x, d)},
                                      {"lhs", lhs},
                                      {"rhs", rhs},
                                      {"ratio", ratio}});
        }
      }
    }
    finite = finite && std::isfinite(c_eps);
    fitted.push_back(c_eps);
    per_eps.push_back({{"eps", eps},
                       {"C", c_eps},
                       {"C_near_branch", c_near},
                       {"C_far_branch", c_far},
                       {"b_bar", dk.b_bar()},
                       {"guarded", guarded}});
  }
  // A sweep with no positive left-hand side (e.g. phi = 0) passes vacuously.
  const double mx = *std::max_element(fitted.begin(), fitted.end());
  const double mn = *std::min_element(fitted.begin(), fitted.end());
  const double spread = mx == 0.0 ? 1.0 : (mn > 0.0 ? mx / mn : kInf);
  r.fitted_constant = mx;
  r.worst_ratio = spread / options.stability_factor;
  r.pass = finite && spread < options.stability_factor;
  r.metrics = {{"per_eps", per_eps}, {"spread", spread}, {"stability_factor", options.stability_factor}};
  r.notes = "near branch: x in supp phi (t^{-d/alpha} slice); far branch: x outside supp phi";
  return r;
}

BoundReport check_density_bound(std::span<const DensityEstimate> estimates, std::span<const double> eps,
                                const DensityBoundOptions& options) {
  if (estimates.empty() || estimates.size() != eps.size()) {
    throw PreconditionError("check_density_bound: need one estimate per eps");
  }
  BoundReport r;
  r.check = "density_bound";
  std::vector<double> fitted;
  nlohmann::json per_eps = nlohmann::json::array();
  bool usable = true;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const DensityEstimate& est = estimates[k];
    const Binning& bins = est.binning;
    const int d = bins.dim;
    double c = 0.0, c_upper = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (est.counts[b] < options.min_count) continue;
      // Mean of the bound over the bin.
      double mean = 0.0;
      if (bins.kind == Binning::Kind::radial) {
        const auto [r0, r1] = bins.distance_range(b, est.start);
        double num = 0.0, den = 0.0;
        for (int s = 0; s < 256; ++s) {
          const double rr = r0 + (s + 0.5) * (r1 - r0) / 256.0;
          const double wgt = std::pow(rr, d - 1);
          num += wgt * bound_kernel(rr, est.t, est.alpha, d);
          den += wgt;
        }
        mean = num / den;
      } else {
        const Point c0 = bins.center(b, est.start);
        const double w = (bins.hi - bins.lo) / bins.bins;
        const int sub = d == 1 ? 256 : (d == 2 ? 16 : 8);
        std::size_t total = 1;
        for (int a = 0; a < d; ++a) total *= sub;
        for (std::size_t s = 0; s < total; ++s) {
          Point y = c0;
          std::size_t rem = s;
          for (int a = 0; a < d; ++a) {
            y[a] += ((rem % sub) + 0.5) * w / sub - 0.5 * w;
            rem /= sub;
          }
          mean += bound_kernel(distance(y, est.start), est.t, est.alpha, d);
        }
        mean /= static_cast<double>(total);
      }
      const double ratio = est.density[b] / mean;
      c = std::max(c, ratio);
      c_upper = std::max(c_upper, (est.density[b] + 2.0 * est.std_error[b]) / mean);
      ++used;
      r.configurations.push_back({{"eps", eps[k]},
                                  {"bin", b},
                                  {"center", point_json(bins.center(b, est.start), d)},
                                  {"count", est.counts[b]},
                                  {"density", est.density[b]},
                                  {"std_error", est.std_error[b]},
                                  {"ratio", ratio}});
    }
    usable = usable && used > 0;
    fitted.push_back(c);
    per_eps.push_back({{"eps", eps[k]},
                       {"C", c},
                       {"C_upper", c_upper},
                       {"bins_used", used},
                       {"atom_mass", est.atom_mass},
                       {"paths", est.paths}});
  }
  const auto [mn, mx] = std::minmax_element(fitted.begin(), fitted.end());
  const double spread = *mn > 0.0 ? *mx / *mn : kInf;
  r.fitted_constant = *mx;
  r.worst_ratio = spread / options.stability_factor;
  r.pass = usable && std::isfinite(*mx) && spread < options.stability_factor;
  r.metrics = {{"per_eps", per_eps}, {"spread", spread}, {"stability_factor", options.stability_factor}};
  r.notes = usable ? "bins with fewer than min_count paths are skipped" : "insufficient samples in some estimate";
  return r;
}

}  // namespace stabledom
