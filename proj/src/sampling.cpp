#include "stabledom/sampling.hpp"

#include <cmath>
#include <numbers>

#include "stabledom/errors.hpp"

namespace stabledom {

double radical_inverse(unsigned long long index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

std::vector<Point> halton_box(int dim, int count, double lo, double hi, unsigned long long skip) {
  static constexpr unsigned kBases[kMaxDim] = {2, 3, 5};
  std::vector<Point> out(static_cast<std::size_t>(count), Point{});
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < dim; ++k) {
      out[i][k] = lo + (hi - lo) * radical_inverse(skip + i, kBases[k]);
    }
  }
  return out;
}

std::vector<Direction> sphere_directions(int dim, int n_angles) {
  std::vector<Direction> dirs;
  if (dim == 1) {
    dirs.push_back({Point{1.0, 0.0, 0.0}, 1.0});
    dirs.push_back({Point{-1.0, 0.0, 0.0}, 1.0});
    return dirs;
  }
  if (n_angles < 2 || n_angles % 2 != 0) {
    throw PreconditionError("sphere_directions: n_angles must be even and >= 2");
  }
  const int half = n_angles / 2;
  const double weight = unit_sphere_area(dim) / n_angles;
  dirs.resize(static_cast<std::size_t>(n_angles));
  if (dim == 2) {
    for (int k = 0; k < half; ++k) {
      double theta = 2.0 * std::numbers::pi * (k + 0.5) / n_angles;
      Point u{std::cos(theta), std::sin(theta), 0.0};
      dirs[k] = {u, weight};
      dirs[k + half] = {-1.0 * u, weight};
    }
    return dirs;
  }
  if (dim == 3) {
    // Fibonacci lattice with equal-area latitude spacing on z in (0, 1).
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < half; ++k) {
      double z = (k + 0.5) / half;
      double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      double phi = golden * k;
      Point u{rho * std::cos(phi), rho * std::sin(phi), z};
      dirs[k] = {u, weight};
      dirs[k + half] = {-1.0 * u, weight};
    }
    return dirs;
  }
  throw PreconditionError("sphere_directions: dimension must be 1, 2 or 3");
}

std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / (count - 1);
  for (int k = 0; k < count; ++k) out[k] = lo * std::exp(step * k);
  out.back() = hi;
  return out;
}

}  // namespace stabledom
