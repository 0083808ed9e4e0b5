#include "stabledom/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "stabledom/errors.hpp"
#include "stabledom/sampling.hpp"
#include "stabledom/truncation.hpp"

namespace stabledom {

JumpKernel::JumpKernel(std::string name, int dim, double alpha, double M, double a, KernelTraits traits,
                       Intensity intensity, nlohmann::json parameters)
    : name_(std::move(name)),
      dim_(dim),
      alpha_(alpha),
      M_(M),
      a_(a),
      traits_(traits),
      intensity_(std::move(intensity)),
      parameters_(std::move(parameters)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw PreconditionError("JumpKernel: dimension must be in [1, 3]");
  if (!(alpha_ > 0.0 && alpha_ < 2.0)) throw PreconditionError("JumpKernel: alpha must lie in (0, 2)");
  if (!(M_ > 0.0)) throw PreconditionError("JumpKernel: M must be positive");
  if (!(a_ >= 0.0)) throw PreconditionError("JumpKernel: a must be nonnegative");
  if (!traits_.sym_h && alpha_ >= 1.0) {
    throw PreconditionError("JumpKernel '" + name_ + "': kernels without h-symmetry require alpha < 1");
  }
  if (!intensity_) throw PreconditionError("JumpKernel: empty intensity");
}

double JumpKernel::evaluate(const Point& x, const Point& y) const {
  if (x == y) throw CoincidentPointsError("JumpKernel::evaluate: x == y");
  return intensity_(x, y);
}

JumpKernel JumpKernel::with_declared_constants(double M, double a) const {
  JumpKernel copy = *this;
  if (!(M > 0.0) || !(a >= 0.0)) throw PreconditionError("with_declared_constants: need M > 0, a >= 0");
  copy.M_ = M;
  copy.a_ = a;
  // The intensity no longer equals the declared envelope.
  copy.traits_.envelope_exact = traits_.envelope_exact && M == M_;
  return copy;
}

nlohmann::json JumpKernel::describe() const {
  nlohmann::json j = parameters_;
  j["name"] = name_;
  j["dim"] = dim_;
  j["alpha"] = alpha_;
  j["M"] = M_;
  j["a"] = a_;
  j["sym_h"] = traits_.sym_h;
  j["sym_xy"] = traits_.sym_xy;
  j["translation_invariant"] = traits_.translation_invariant;
  return j;
}

JumpKernel isotropic(double alpha, int dim) {
  const double exponent = -alpha - dim;
  auto f = [exponent](const Point& x, const Point& y) { return std::pow(distance(x, y), exponent); };
  KernelTraits traits{.sym_h = true, .sym_xy = true, .translation_invariant = true, .envelope_exact = true};
  return JumpKernel("isotropic", dim, alpha, 1.0, unit_sphere_area(dim) / alpha, traits, f,
                    {{"alpha", alpha}, {"dim", dim}});
}

namespace {

// Fraction of the unit sphere covered by V u (-V) for a cap of the given half-angle.
double double_cap_fraction(int dim, double half_angle) {
  switch (dim) {
    case 1:
      return 1.0;
    case 2:
      return 2.0 * half_angle / std::numbers::pi;
    case 3:
      return 1.0 - std::cos(half_angle);
    default:
      throw PreconditionError("double_cone: dimension must be <= 3");
  }
}

}  // namespace

JumpKernel double_cone(double alpha, int dim, Point axis, double half_angle) {
  if (!(half_angle > 0.0 && half_angle <= std::numbers::pi / 2)) {
    throw PreconditionError("double_cone: half_angle must lie in (0, pi/2]");
  }
  for (int k = dim; k < kMaxDim; ++k) axis[k] = 0.0;
  const double axis_norm = norm(axis);
  if (!(axis_norm > 0.0)) throw PreconditionError("double_cone: axis must be nonzero");
  axis = (1.0 / axis_norm) * axis;
  const double cos_half = std::cos(half_angle);
  const double exponent = -alpha - dim;
  auto f = [axis, cos_half, exponent](const Point& x, const Point& y) {
    Point h = y - x;
    double r = norm(h);
    // |<u, h/|h|>| >= cos(half_angle) covers the cap and its reflection.
    if (std::abs(dot(axis, h)) < cos_half * r) return 0.0;
    return std::pow(r, exponent);
  };
  KernelTraits traits{.sym_h = true, .sym_xy = true, .translation_invariant = true,
                      .envelope_exact = (dim == 1)};
  const double a = double_cap_fraction(dim, half_angle) * unit_sphere_area(dim) / alpha;
  return JumpKernel("double_cone", dim, alpha, 1.0, a, traits, f,
                    {{"alpha", alpha},
                     {"dim", dim},
                     {"axis", std::vector<double>(axis.begin(), axis.begin() + dim)},
                     {"half_angle", half_angle}});
}

JumpKernel stable_like(double alpha, int dim, double eta, Point u) {
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("stable_like: eta must lie in (0, 1)");
  for (int k = dim; k < kMaxDim; ++k) u[k] = 0.0;
  const double exponent = -alpha - dim;
  auto f = [eta, u, exponent](const Point& x, const Point& y) {
    return (1.0 + eta * std::sin(dot(u, x)) * std::sin(dot(u, y))) * std::pow(distance(x, y), exponent);
  };
  KernelTraits traits{.sym_h = false, .sym_xy = true, .translation_invariant = false, .envelope_exact = false};
  const double s = unit_sphere_area(dim);
  return JumpKernel("stable_like", dim, alpha, 1.0 + eta, (1.0 - eta) * s / alpha, traits, f,
                    {{"alpha", alpha},
                     {"dim", dim},
                     {"eta", eta},
                     {"u", std::vector<double>(u.begin(), u.begin() + dim)}});
}

JumpKernel scaled(const JumpKernel& kernel, double c) {
  if (!(c >= 0.0)) throw PreconditionError("scaled: factor must be nonnegative");
  auto inner = kernel;
  auto f = [inner, c](const Point& x, const Point& y) { return c * inner.raw(x, y); };
  KernelTraits traits = kernel.traits();
  traits.envelope_exact = traits.envelope_exact && c == 1.0;
  nlohmann::json params = kernel.parameters();
  params["scale"] = c;
  params["base"] = kernel.name();
  const double M = c > 0.0 ? c * kernel.M() : kernel.M();
  return JumpKernel("scaled", kernel.dim(), kernel.alpha(), M, c * kernel.a(), traits, f, params);
}

namespace {

Point point_from_json(const nlohmann::json& j, int dim, Point fallback) {
  if (j.is_number()) {
    Point p{};
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array()) return fallback;
  Point p{};
  if (static_cast<int>(j.size()) != dim) throw ConfigError("kernel vector parameter has wrong dimension");
  for (int k = 0; k < dim; ++k) p[k] = j.at(k).get<double>();
  return p;
}

}  // namespace

JumpKernel kernel_from_json(const nlohmann::json& spec) {
  try {
    const std::string name = spec.at("name").get<std::string>();
    const double alpha = spec.at("alpha").get<double>();
    const int dim = spec.value("dim", 1);
    JumpKernel kernel = [&]() {
      if (name == "isotropic") return isotropic(alpha, dim);
      if (name == "double_cone") {
        Point axis = point_from_json(spec.value("axis", nlohmann::json()), dim, Point{1.0, 0.0, 0.0});
        return double_cone(alpha, dim, axis, spec.value("half_angle", std::numbers::pi / 4));
      }
      if (name == "stable_like") {
        Point u = point_from_json(spec.value("u", nlohmann::json()), dim, Point{1.0, 0.0, 0.0});
        return stable_like(alpha, dim, spec.value("eta", 0.5), u);
      }
      throw ConfigError("unknown kernel '" + name + "'");
    }();
    if (spec.contains("scale")) kernel = scaled(kernel, spec.at("scale").get<double>());
    if (spec.contains("M") || spec.contains("a")) {
      kernel = kernel.with_declared_constants(spec.value("M", kernel.M()), spec.value("a", kernel.a()));
    }
    return kernel;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("kernel spec: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("kernel spec: ") + e.what());
  }
}

// --- assumption verification ----------------------------------------------

namespace {

struct Offset {
  Point h;
  double r;
};

std::vector<Offset> sample_offsets(int dim, const AssumptionSamplePlan& plan) {
  std::vector<Offset> out;
  const auto radii = log_space(plan.min_radius, plan.max_radius, plan.offsets);
  for (int k = 0; k < plan.offsets; ++k) {
    Point u{};
    if (dim == 1) {
      u[0] = radical_inverse(k + 1, 2) < 0.5 ? 1.0 : -1.0;
    } else if (dim == 2) {
      double theta = 2.0 * std::numbers::pi * radical_inverse(k + 1, 3);
      u = {std::cos(theta), std::sin(theta), 0.0};
    } else {
      double z = 2.0 * radical_inverse(k + 1, 3) - 1.0;
      double phi = 2.0 * std::numbers::pi * radical_inverse(k + 1, 5);
      double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      u = {rho * std::cos(phi), rho * std::sin(phi), z};
    }
    out.push_back({radii[k] * u, radii[k]});
  }
  return out;
}

nlohmann::json point_json(const Point& p, int dim) { return std::vector<double>(p.begin(), p.begin() + dim); }

}  // namespace

AssumptionReport verify_assumptions(const JumpKernel& kernel, const AssumptionSamplePlan& plan) {
  return verify_assumptions(kernel, plan, QuadratureSpec{});
}

AssumptionReport verify_assumptions(const JumpKernel& kernel, const AssumptionSamplePlan& plan,
                                    const QuadratureSpec& quad) {
  const int d = kernel.dim();
  const double alpha = kernel.alpha();
  const auto xs = halton_box(d, plan.base_points, -plan.box, plan.box);
  const auto offsets = sample_offsets(d, plan);

  AssumptionReport rep;

  // Domination: f(x, x+h) |h|^{alpha+d} <= M.
  {
    BoundReport& r = rep.domination;
    r.check = "A1_domination";
    r.declared_constant = kernel.M();
    double worst = 0.0;
    Point worst_x{}, worst_h{};
    for (const auto& x : xs) {
      for (const auto& off : offsets) {
        double ratio = kernel.evaluate(x, x + off.h) * std::pow(off.r, alpha + d);
        if (ratio > worst) {
          worst = ratio;
          worst_x = x;
          worst_h = off.h;
        }
      }
    }
    r.fitted_constant = worst;
    r.worst_ratio = worst / kernel.M();
    r.pass = r.worst_ratio <= 1.0 + plan.symmetry_tol;
    r.configurations.push_back({{"x", point_json(worst_x, d)}, {"h", point_json(worst_h, d)}});
    r.metrics = {{"samples", xs.size() * offsets.size()}};
    rep.fitted_M = worst;
  }

  // h-symmetry, or alpha < 1.
  {
    BoundReport& r = rep.h_symmetry;
    r.check = "A2_h_symmetry";
    double worst = 0.0;
    for (const auto& x : xs) {
      for (const auto& off : offsets) {
        double fp = kernel.evaluate(x, x + off.h);
        double fm = kernel.evaluate(x, x - off.h);
        double scale = std::max({std::abs(fp), std::abs(fm), 1e-300});
        worst = std::max(worst, std::abs(fp - fm) / scale);
      }
    }
    r.fitted_constant = worst;
    r.metrics = {{"max_relative_defect", worst}, {"alpha_below_one", alpha < 1.0}};
    if (kernel.traits().sym_h) {
      r.worst_ratio = worst / plan.symmetry_tol;
      r.pass = worst <= plan.symmetry_tol;
      r.notes = "declared h-symmetric";
    } else {
      r.worst_ratio = alpha < 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
      r.pass = alpha < 1.0;
      r.notes = "not h-symmetric; relies on alpha < 1";
    }
  }

  // xy-symmetry.
  {
    BoundReport& r = rep.xy_symmetry;
    r.check = "A3_xy_symmetry";
    double worst = 0.0;
    for (const auto& x : xs) {
      for (const auto& off : offsets) {
        Point y = x + off.h;
        double fxy = kernel.evaluate(x, y);
        double fyx = kernel.evaluate(y, x);
        double scale = std::max({std::abs(fxy), std::abs(fyx), 1e-300});
        worst = std::max(worst, std::abs(fxy - fyx) / scale);
      }
    }
    r.fitted_constant = worst;
    r.metrics = {{"max_relative_defect", worst}};
    if (kernel.traits().sym_xy) {
      r.worst_ratio = worst / plan.symmetry_tol;
      r.pass = worst <= plan.symmetry_tol;
    } else {
      r.worst_ratio = 0.0;
      r.pass = true;
      r.gated = false;
      r.notes = "not declared; reported only";
    }
  }

  // Lower rate: b_eps(x) eps^alpha >= a.
  {
    BoundReport& r = rep.lower_rate;
    r.check = "A4_lower_rate";
    r.declared_constant = kernel.a();
    double min_scaled = std::numeric_limits<double>::infinity();
    double min_upper = std::numeric_limits<double>::infinity();
    nlohmann::json worst_cfg;
    // Translation-invariant kernels need a single x per eps.
    const std::size_t n_x = kernel.traits().translation_invariant ? 1 : xs.size();
    for (double eps : plan.eps) {
      for (std::size_t i = 0; i < n_x; ++i) {
        RateEstimate b = rate_integral(kernel, eps, xs[i], quad);
        double scaled_value = b.value * std::pow(eps, alpha);
        if (scaled_value < min_scaled) {
          min_scaled = scaled_value;
          worst_cfg = {{"x", point_json(xs[i], d)}, {"eps", eps}, {"b_eps", b.value}};
        }
        min_upper = std::min(min_upper, b.upper() * std::pow(eps, alpha));
      }
    }
    r.fitted_constant = min_scaled;
    r.configurations.push_back(worst_cfg);
    // Ratio a / min(b eps^alpha); > 1 means the declared a is too large.
    r.worst_ratio = kernel.a() > 0.0 ? kernel.a() / min_scaled : 0.0;
    r.pass = kernel.a() > 0.0 && kernel.a() <= min_upper * (1.0 + 1e-9);
    r.notes = "fitted constant is min b_eps(x) eps^alpha";
    rep.fitted_a = min_scaled;
  }

  // Continuity smoke test of x -> f(x, y) off the diagonal.
  {
    BoundReport& r = rep.continuity;
    r.check = "A5_continuity";
    double worst = 0.0;
    for (const auto& x : xs) {
      for (const auto& off : offsets) {
        Point y = x + off.h;
        Point step{};
        for (int k = 0; k < d; ++k) step[k] = plan.continuity_step / std::sqrt(static_cast<double>(d));
        double f0 = kernel.evaluate(x, y);
        double f1 = kernel.evaluate(x + step, y);
        double env = kernel.envelope(off.r);
        worst = std::max(worst, std::abs(f1 - f0) / env);
      }
    }
    r.fitted_constant = worst;
    r.worst_ratio = worst / plan.continuity_tol;
    r.pass = worst <= plan.continuity_tol;
    r.notes = "max |f(x',y) - f(x,y)| / (M|y-x|^{-alpha-d}) for |x'-x| = continuity_step";
  }

  rep.pass = rep.domination.pass && rep.h_symmetry.pass && rep.xy_symmetry.pass && rep.lower_rate.pass &&
             rep.continuity.pass;
  return rep;
}

}  // namespace stabledom
