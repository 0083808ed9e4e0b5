#pragma once

#include <vector>

#include "stabledom/point.hpp"

namespace stabledom {

/// Radical inverse of `index` in `base` (van der Corput sequence).
double radical_inverse(unsigned long long index, unsigned base);

/// Halton points in [lo, hi]^dim, skipping the first `skip` indices.
std::vector<Point> halton_box(int dim, int count, double lo, double hi, unsigned long long skip = 1);

/// A weighted direction on the unit sphere.
struct Direction {
  Point u;
  double weight;
};

/// Quadrature directions on S^{d-1} whose weights sum to the sphere area.
/// The set is antipodally paired: entry k + size/2 is the negation of entry k.
///   d = 1: {+1, -1};
///   d = 2: `n_angles` equispaced angles;
///   d = 3: a Fibonacci lattice on the upper hemisphere plus antipodes.
std::vector<Direction> sphere_directions(int dim, int n_angles);

/// Log-spaced values lo * (hi/lo)^{k/(count-1)}.
std::vector<double> log_space(double lo, double hi, int count);

}  // namespace stabledom
