#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "stabledom/errors.hpp"
#include "stabledom/semigroup.hpp"

namespace stabledom {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr double kPi = std::numbers::pi;

double gk(const std::function<double(double)>& g, double a, double b, double* err) {
  double e = 0.0;
  double v = GK::integrate(g, a, b, 4, 1e-11, &e);
  *err += e;
  return v;
}

// int_0^inf (1 - cos s) s^{-1-alpha} ds.
double oscillatory_factor(double alpha) {
  double err = 0.0;
  // [0, 1] in log coordinates: the integrand behaves like s^{1-alpha} / 2.
  auto head = [&](double v) {
    const double s = std::exp(v);
    const double half = std::sin(0.5 * s);
    return 2.0 * half * half * std::pow(s, -alpha);
  };
  double sum = 0.0;
  const double lo = -60.0 / (2.0 - alpha);
  for (double a = lo; a < 0.0; a += 1.0) sum += gk(head, a, std::min(a + 1.0, 0.0), &err);
  auto body = [&](double s) {
    const double half = std::sin(0.5 * s);
    return 2.0 * half * half * std::pow(s, -1.0 - alpha);
  };
  const int periods = 400;
  const double L = 2.0 * kPi * periods;
  sum += gk(body, 1.0, 2.0 * kPi, &err);
  for (int p = 1; p < periods; ++p) sum += gk(body, 2.0 * kPi * p, 2.0 * kPi * (p + 1), &err);
  // int_L^inf (1 - cos s) s^{-1-alpha} ds by repeated integration by parts (L a multiple of 2 pi).
  sum += std::pow(L, -alpha) / alpha - (1.0 + alpha) * std::pow(L, -2.0 - alpha);
  if (err > 1e-10 * sum) throw QuadratureError("stable_constant: oscillatory integral did not converge");
  return sum;
}

// int_{S^{d-1}} |u_1|^alpha dsigma(u).
double sphere_moment(double alpha, int dim) {
  double err = 0.0;
  switch (dim) {
    case 1:
      return 2.0;
    case 2:
      return 4.0 * gk([&](double th) { return std::pow(std::cos(th), alpha); }, 0.0, 0.5 * kPi, &err);
    case 3:
      return 4.0 * kPi * gk([&](double z) { return std::pow(z, alpha); }, 0.0, 1.0, &err);
    default:
      throw PreconditionError("stable_constant: dimension must be 1, 2 or 3");
  }
}

}  // namespace

double stable_constant(double alpha, int dim) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw PreconditionError("stable_constant: alpha must lie in (0, 2)");
  static std::mutex guard;
  static std::map<std::pair<double, int>, double> cache;
  {
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find({alpha, dim});
    if (it != cache.end()) return it->second;
  }
  const double c = sphere_moment(alpha, dim) * oscillatory_factor(alpha);
  std::lock_guard<std::mutex> lock(guard);
  cache[{alpha, dim}] = c;
  return c;
}

double reference_density(double alpha, int dim, double t, const Point& x, double tol) {
  if (dim != 1 && dim != 2) throw PreconditionError("reference_density: dimension must be 1 or 2");
  if (!(t > 0.0)) throw PreconditionError("reference_density: t must be positive");
  const double tau = t * stable_constant(alpha, dim);
  const double scale = std::pow(tau, -1.0 / alpha);  // xi = eta * scale
  const double z = norm(x) * scale;
  const double cutoff = std::pow(45.0, 1.0 / alpha);  // exp(-eta^alpha) < 3e-20 beyond
  auto decay = [alpha](double eta) { return std::exp(-std::pow(eta, alpha)); };

  double value = 0.0, err = 0.0;
  if (dim == 1 && z > 20.0) {
    boost::math::quadrature::ooura_fourier_cos<double> ooura(tol * 1e-2);
    auto [v, rel] = ooura.integrate(decay, z);
    value = v;
    err = std::abs(rel * v);
  } else {
    std::function<double(double)> g;
    if (dim == 1) {
      g = [&](double eta) { return std::cos(eta * z) * decay(eta); };
    } else {
      g = [&](double eta) { return std::cyl_bessel_j(0.0, eta * z) * decay(eta) * eta; };
    }
    const double width = z > 0.0 ? std::min(1.0, kPi / z) : 1.0;
    const double count = std::ceil(cutoff / width);
    if (count > 2e6) throw QuadratureError("reference_density: too many oscillations to resolve");
    // Geometric panels near the origin absorb the eta^alpha cusp.
    double a = 0.0;
    for (double b = std::min(width, cutoff) * 1e-8; a < cutoff;) {
      value += gk(g, a, b, &err);
      a = b;
      b = std::min({cutoff, b < width ? b * 8.0 : b + width});
    }
  }
  const double norm_factor = dim == 1 ? scale / kPi : scale * scale / (2.0 * kPi);
  value *= norm_factor;
  err *= norm_factor;
  if (err > tol * std::abs(value) + 1e-300) {
    throw QuadratureError("reference_density: inversion error " + std::to_string(err) + " exceeds tolerance");
  }
  return value;
}

}  // namespace stabledom
