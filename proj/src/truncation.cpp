#include "stabledom/truncation.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stabledom/errors.hpp"
#include "stabledom/sampling.hpp"

namespace stabledom {

double QuadratureSpec::r_tail_for(double eps) const {
  if (r_tail > 0.0) return std::max(r_tail, 2.0 * eps);
  return std::max(1e3 * eps, 1e3);
}

void to_json(nlohmann::json& j, const QuadratureSpec& q) {
  j = nlohmann::json{{"radial_panels", q.radial_panels}, {"n_angles", q.n_angles},
                     {"r_tail", q.r_tail},               {"panel_tol", q.panel_tol},
                     {"max_depth", q.max_depth},         {"max_rel_error", q.max_rel_error}};
}

void from_json(const nlohmann::json& j, QuadratureSpec& q) {
  q.radial_panels = j.value("radial_panels", q.radial_panels);
  q.n_angles = j.value("n_angles", q.n_angles);
  q.r_tail = j.value("r_tail", q.r_tail);
  q.panel_tol = j.value("panel_tol", q.panel_tol);
  q.max_depth = j.value("max_depth", q.max_depth);
  q.max_rel_error = j.value("max_rel_error", q.max_rel_error);
}

void to_json(nlohmann::json& j, const ContextOptions& o) {
  j = nlohmann::json{{"quad", o.quad},
                     {"safety", o.safety},
                     {"x_samples", o.x_samples},
                     {"x_half_width", o.x_half_width},
                     {"extra_points", o.extra_points.size()}};
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

}  // namespace

RateEstimate rate_integral(const JumpKernel& kernel, double eps, const Point& x, const QuadratureSpec& quad) {
  if (!(eps > 0.0)) throw PreconditionError("rate_integral: eps must be positive");
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  const double r_tail = quad.r_tail_for(eps);
  const auto dirs = sphere_directions(d, quad.n_angles);
  const double s_lo = std::log(eps);
  const double s_hi = std::log(r_tail);
  // The outer decade [r_tail/10, r_tail] is integrated on its own panels; its
  // ratio to the envelope extrapolates the tail beyond r_tail.
  const double s_mid = std::max(s_lo, s_hi - std::log(10.0));
  const int panels = std::max(2, quad.radial_panels);
  const int outer_panels =
      s_mid > s_lo ? std::clamp(static_cast<int>(std::lround(panels * (s_hi - s_mid) / (s_hi - s_lo))), 1, panels - 1)
                   : panels;
  const int inner_panels = s_mid > s_lo ? panels - outer_panels : 0;
  const double r_mid = std::exp(s_mid);
  const double outer_envelope = kernel.M() * (std::pow(r_mid, -alpha) - std::pow(r_tail, -alpha)) / alpha;

  RateEstimate out;
  out.r_tail = r_tail;
  out.tail_bound = kernel.rate_constant() * std::pow(r_tail, -alpha);

  double shell = 0.0;
  double err = 0.0;
  double tail = 0.0;
  for (const auto& dir : dirs) {
    // In s = log r the measure r^{d-1} dr becomes r^d ds.
    auto integrand = [&](double s) {
      double r = std::exp(s);
      return kernel.raw(x, x + r * dir.u) * std::pow(r, d);
    };
    auto integrate_range = [&](double a, double b, int count, double& error) {
      double sum = 0.0;
      const double step = (b - a) / count;
      for (int p = 0; p < count; ++p) {
        double lo = a + p * step;
        double hi = (p + 1 == count) ? b : lo + step;
        double e = 0.0;
        sum += GK::integrate(integrand, lo, hi, quad.max_depth, quad.panel_tol, &e);
        error += e;
      }
      return sum;
    };
    double ray_err = 0.0;
    double inner = inner_panels > 0 ? integrate_range(s_lo, s_mid, inner_panels, ray_err) : 0.0;
    double outer = integrate_range(s_mid, s_hi, outer_panels, ray_err);
    shell += dir.weight * (inner + outer);
    err += dir.weight * ray_err;
    double ratio = outer_envelope > 0.0 ? std::clamp(outer / outer_envelope, 0.0, 1.0) : 1.0;
    tail += dir.weight * ratio * kernel.M() * std::pow(r_tail, -alpha) / alpha;
  }
  out.quad_error = err;
  out.tail_estimate = std::min(tail, out.tail_bound);
  out.value = shell + out.tail_estimate;
  if (out.value > 0.0 && out.quad_error > quad.max_rel_error * out.value) {
    throw QuadratureError("rate_integral: estimated relative error " + std::to_string(out.quad_error / out.value) +
                          " exceeds tolerance");
  }
  return out;
}

TruncationContext::TruncationContext(JumpKernel kernel, double eps, double b_bar, double b_under,
                                     QuadratureSpec quad, nlohmann::json provenance)
    : kernel_(std::move(kernel)),
      eps_(eps),
      b_bar_(b_bar),
      b_under_(b_under),
      quad_(quad),
      provenance_(std::move(provenance)) {
  if (!(eps_ > 0.0)) throw PreconditionError("TruncationContext: eps must be positive");
  if (!(b_bar_ >= 0.0) || !std::isfinite(b_bar_)) throw PreconditionError("TruncationContext: invalid b_bar");
  if (kernel_.traits().translation_invariant) invariant_rate_ = rate_integral(kernel_, eps_, Point{}, quad_);
}

RateEstimate TruncationContext::b_eps(const Point& x) const {
  if (kernel_.traits().translation_invariant) return invariant_rate_;
  return rate_integral(kernel_, eps_, x, quad_);
}

double TruncationContext::truncated_eval(const Point& x, const Point& y) const {
  if (distance(x, y) <= eps_) return 0.0;
  return kernel_.raw(x, y);
}

TruncationContext TruncationContext::with_b_bar(double b_bar) const {
  if (!(b_bar >= b_bar_)) throw PreconditionError("with_b_bar: the rate may only be increased");
  TruncationContext copy = *this;
  copy.b_bar_ = b_bar;
  copy.provenance_["b_bar_override"] = b_bar;
  return copy;
}

nlohmann::json TruncationContext::to_json() const {
  return {{"kernel", kernel_.describe()}, {"eps", eps_},     {"b_bar", b_bar_},
          {"b_under", b_under_},          {"quad", quad_},   {"analytic_bound", analytic_bound()},
          {"provenance", provenance_}};
}

TruncationContext make_context(const JumpKernel& kernel, double eps, const ContextOptions& options) {
  if (!(eps > 0.0)) throw PreconditionError("make_context: eps must be positive");
  if (kernel.traits().translation_invariant) {
    RateEstimate b = rate_integral(kernel, eps, Point{}, options.quad);
    return TruncationContext(kernel, eps, b.value, b.value, options.quad,
                             {{"rule", "translation-invariant: b_bar = b_eps exactly"}});
  }
  std::vector<Point> xs;
  const int d = kernel.dim();
  const int per_axis = std::max(1, options.x_samples);
  const double hw = options.x_half_width;
  auto axis_value = [&](int k) {
    return per_axis == 1 ? 0.0 : -hw + 2.0 * hw * k / (per_axis - 1);
  };
  if (d == 1) {
    for (int i = 0; i < per_axis; ++i) xs.push_back(Point{axis_value(i), 0.0, 0.0});
  } else {
    // A full tensor grid is too costly beyond d = 1; use Halton points instead.
    auto pts = halton_box(d, per_axis * 4, -hw, hw, 0);
    xs.insert(xs.end(), pts.begin(), pts.end());
  }
  xs.insert(xs.end(), options.extra_points.begin(), options.extra_points.end());

  double max_value = 0.0;
  double max_upper = 0.0;
  double min_lower = std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    RateEstimate b = rate_integral(kernel, eps, x, options.quad);
    max_value = std::max(max_value, b.value);
    max_upper = std::max(max_upper, b.upper());
    min_lower = std::min(min_lower, b.lower());
  }
  const double cap = kernel.rate_constant() * std::pow(eps, -kernel.alpha());
  const double b_bar = std::max(max_value, std::min(options.safety * max_upper, cap));
  return TruncationContext(kernel, eps, b_bar, min_lower, options.quad,
                           {{"rule", "sampled sup, inflated and capped"},
                            {"samples", xs.size()},
                            {"max_sampled", max_value},
                            {"max_upper", max_upper},
                            {"safety", options.safety}});
}

}  // namespace stabledom
