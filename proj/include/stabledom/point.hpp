#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace stabledom {

// Points live in a fixed-capacity array; coordinates past the working
// dimension are kept at zero so norms and dot products need no dim argument.
inline constexpr int kMaxDim = 3;
using Point = std::array<double, kMaxDim>;

inline Point operator+(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Point operator-(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Point operator*(double s, const Point& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

inline double dot(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Surface measure of the unit sphere in R^d, s_{d-1} = 2 pi^{d/2} / Gamma(d/2).
inline double unit_sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int dim) { return unit_sphere_area(dim) / dim; }

}  // namespace stabledom
