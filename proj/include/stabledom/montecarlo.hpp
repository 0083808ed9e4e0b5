#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/point.hpp"
#include "stabledom/rng.hpp"
#include "stabledom/truncation.hpp"

namespace stabledom {

struct SamplerOptions {
  std::uint64_t max_rejections = 1000000;  ///< cap of the draw_jump rejection loop
};

/// The uniformization chain of the truncated kernel.
///
/// Translation-invariant kernels are clocked at b_bar = b_eps and jump at every
/// ring. Other kernels are clocked at the envelope rate A eps^{-alpha}: each
/// ring proposes h from the envelope and a rejected proposal is a lazy
/// self-jump, which realizes the stay probability 1 - b_eps(x) / b_bar
/// without evaluating b_eps along the path.
class Sampler {
 public:
  explicit Sampler(TruncationContext ctx, const SamplerOptions& options = {});

  const TruncationContext& context() const { return ctx_; }
  double b_bar() const { return ctx_.b_bar(); }
  /// b_eps(x) (by quadrature for non-invariant kernels; not used while sampling).
  double rate(const Point& x) const;
  /// One jump from x drawn from f_eps(x, x + .) / b_eps(x) by rejection against the envelope.
  /// Throws SamplerError when the rejection cap is exceeded.
  Point draw_jump(const Point& x, PathStream& stream) const;
  /// One clock ring: moves x and returns true, or stays and returns false.
  bool step(Point& x, PathStream& stream) const;

 private:
  Point propose(const Point& x, PathStream& stream) const;
  double acceptance(const Point& x, const Point& y) const;

  TruncationContext ctx_;
  SamplerOptions options_;
  bool invariant_;
  bool exact_envelope_;
};

struct PathEndpoint {
  Point start{};
  double t = 0.0;
  Point endpoint{};
  std::uint64_t events = 0;    ///< Poisson(t b_bar) clock rings, stays included
  std::uint64_t accepted = 0;  ///< spatial jumps
  bool moved = false;
};

/// Simulates one path of the chain up to time t.
PathEndpoint sample_endpoint(const Sampler& sampler, const Point& x0, double t, PathStream& stream);

struct MonteCarloOptions {
  std::uint64_t seed = 20240601;
  std::uint64_t first_path = 0;
  int workers = 0;  ///< 0 keeps the OpenMP default
};

struct SemigroupEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t paths = 0;
  double mean_events = 0.0;
};

/// Mean of phi(X_t) over N independent paths started at x0. Throws
/// PreconditionError for N < 100. Results do not depend on the worker count.
SemigroupEstimate estimate_semigroup(const Sampler& sampler, const std::function<double(const Point&)>& phi,
                                     const Point& x0, double t, std::uint64_t N,
                                     const MonteCarloOptions& options = {});

/// Histogram bins: a regular grid on [lo, hi]^d or radial shells around x0.
struct Binning {
  enum class Kind { grid, radial };
  Kind kind = Kind::grid;
  int dim = 1;
  double lo = -1.0;
  double hi = 1.0;
  int bins = 20;              ///< per axis (grid) or number of shells (radial)
  std::vector<double> edges;  ///< radial shell edges (size bins + 1)

  static Binning grid(int dim, double lo, double hi, int bins);
  static Binning radial(int dim, std::vector<double> edges);

  std::size_t size() const;
  /// Bin index of y, or -1 when out of range.
  long locate(const Point& y, const Point& x0) const;
  double volume(std::size_t bin) const;
  /// Representative point (grid: cell centre; radial: mid-radius on axis 0).
  Point center(std::size_t bin, const Point& x0) const;
  /// Distance range [rmin, rmax] of the bin from x0.
  std::pair<double, double> distance_range(std::size_t bin, const Point& x0) const;
};

struct DensityEstimate {
  Binning binning;
  Point start{};
  double t = 0.0;
  double alpha = 1.0;
  std::uint64_t paths = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t atom_count = 0;
  std::uint64_t out_of_range = 0;
  double atom_mass = 0.0;
  double out_of_range_mass = 0.0;
  std::vector<double> density;
  std::vector<double> std_error;
  std::vector<std::string> warnings;

  double histogram_mass() const;
};

/// Histogram of the endpoints that moved; the rest form the atom at x0.
DensityEstimate estimate_density(const Sampler& sampler, const Point& x0, double t, std::uint64_t N,
                                 const Binning& binning, const MonteCarloOptions& options = {});

}  // namespace stabledom
