#include "stabledom/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parallel.hpp"
#include "stabledom/errors.hpp"

namespace stabledom {

namespace {

constexpr std::uint64_t kChunk = 1024;  // paths per reduction chunk

}  // namespace

// --- Sampler -------------------------------------------------------------------

Sampler::Sampler(TruncationContext ctx, const SamplerOptions& options)
    : ctx_(std::move(ctx)),
      options_(options),
      invariant_(ctx_.kernel().traits().translation_invariant),
      exact_envelope_(ctx_.kernel().traits().envelope_exact) {
  // Clocking at the envelope rate turns every rejected proposal into a lazy
  // self-jump, so b_eps(x) is never needed along a path.
  if (!invariant_) ctx_ = ctx_.with_b_bar(std::max(ctx_.b_bar(), ctx_.analytic_bound()));
}

double Sampler::rate(const Point& x) const { return invariant_ ? ctx_.b_bar() : ctx_.b_eps(x).value; }

Point Sampler::propose(const Point& x, PathStream& stream) const {
  const int d = ctx_.kernel().dim();
  const double alpha = ctx_.kernel().alpha();
  const double eps = ctx_.eps();
  const double u = stream.uniform();
  const double r = alpha == 1.0 ? eps / u : eps * std::pow(u, -1.0 / alpha);
  Point h{};
  if (d == 1) {
    h[0] = (stream.next_u32() & 1u) ? r : -r;
  } else if (d == 2) {
    const double th = 2.0 * std::numbers::pi * stream.uniform();
    h = {r * std::cos(th), r * std::sin(th), 0.0};
  } else {
    const double z = 2.0 * stream.uniform() - 1.0;
    const double th = 2.0 * std::numbers::pi * stream.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    h = {r * s * std::cos(th), r * s * std::sin(th), r * z};
  }
  return x + h;
}

double Sampler::acceptance(const Point& x, const Point& y) const {
  if (exact_envelope_) return 1.0;
  const JumpKernel& k = ctx_.kernel();
  const double ratio = k.raw(x, y) * std::pow(distance(x, y), k.alpha() + k.dim()) / k.M();
  if (ratio > 1.0 + 1e-12) {
    throw SamplerError("Sampler: f(x, y) exceeds the declared envelope M |y - x|^{-alpha-d}");
  }
  return ratio;
}

Point Sampler::draw_jump(const Point& x, PathStream& stream) const {
  for (std::uint64_t tries = 0; tries < options_.max_rejections; ++tries) {
    const Point y = propose(x, stream);
    const double a = acceptance(x, y);
    if (a >= 1.0 || stream.uniform() < a) return y;
  }
  throw SamplerError("Sampler: rejection cap exceeded; the kernel may violate its declared domination constant");
}

bool Sampler::step(Point& x, PathStream& stream) const {
  if (invariant_) {
    // b_eps == b_bar: no lazy self-jumps.
    x = draw_jump(x, stream);
    return true;
  }
  const Point y = propose(x, stream);
  const double a = acceptance(x, y);
  if (a < 1.0 && stream.uniform() >= a) return false;
  x = y;
  return true;
}

PathEndpoint sample_endpoint(const Sampler& sampler, const Point& x0, double t, PathStream& stream) {
  if (!(t >= 0.0)) throw PreconditionError("sample_endpoint: t must be >= 0");
  PathEndpoint p;
  p.start = x0;
  p.t = t;
  p.endpoint = x0;
  if (t == 0.0) return p;
  p.events = stream.poisson(t * sampler.b_bar());
  for (std::uint64_t e = 0; e < p.events; ++e) {
    if (sampler.step(p.endpoint, stream)) ++p.accepted;
  }
  p.moved = p.accepted > 0;
  return p;
}

SemigroupEstimate estimate_semigroup(const Sampler& sampler, const std::function<double(const Point&)>& phi,
                                     const Point& x0, double t, std::uint64_t N, const MonteCarloOptions& options) {
  if (N < 100) throw PreconditionError("estimate_semigroup: need at least 100 paths");
  const std::uint64_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks), squares(chunks), events(chunks);
  detail::parallel_for(
      chunks,
      [&](std::size_t c) {
        double s = 0.0, q = 0.0, ev = 0.0;
        const std::uint64_t end = std::min<std::uint64_t>(N, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) {
          PathStream stream(options.seed, options.first_path + i);
          const PathEndpoint p = sample_endpoint(sampler, x0, t, stream);
          const double v = phi(p.endpoint);
          s += v;
          q += v * v;
          ev += static_cast<double>(p.events);
        }
        sums[c] = s;
        squares[c] = q;
        events[c] = ev;
      },
      options.workers);
  double s = 0.0, q = 0.0, ev = 0.0;
  for (std::uint64_t c = 0; c < chunks; ++c) s += sums[c], q += squares[c], ev += events[c];
  SemigroupEstimate out;
  out.paths = N;
  out.mean = s / N;
  const double var = std::max(0.0, (q - s * s / N) / (N - 1));
  out.std_error = std::sqrt(var / N);
  out.mean_events = ev / N;
  return out;
}

// --- Binning -------------------------------------------------------------------

Binning Binning::grid(int dim, double lo, double hi, int bins) {
  if (dim < 1 || dim > kMaxDim || !(hi > lo) || bins < 1) throw PreconditionError("Binning::grid: invalid layout");
  Binning b;
  b.kind = Kind::grid;
  b.dim = dim;
  b.lo = lo;
  b.hi = hi;
  b.bins = bins;
  return b;
}

Binning Binning::radial(int dim, std::vector<double> edges) {
  if (dim < 1 || dim > kMaxDim || edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) || edges[0] < 0.0) {
    throw PreconditionError("Binning::radial: need >= 2 sorted nonnegative edges");
  }
  Binning b;
  b.kind = Kind::radial;
  b.dim = dim;
  b.bins = static_cast<int>(edges.size()) - 1;
  b.lo = edges.front();
  b.hi = edges.back();
  b.edges = std::move(edges);
  return b;
}

std::size_t Binning::size() const {
  if (kind == Kind::radial) return static_cast<std::size_t>(bins);
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(bins);
  return n;
}

long Binning::locate(const Point& y, const Point& x0) const {
  if (kind == Kind::radial) {
    const double r = distance(y, x0);
    if (r < edges.front() || r >= edges.back()) return -1;
    return static_cast<long>(std::upper_bound(edges.begin(), edges.end(), r) - edges.begin()) - 1;
  }
  long index = 0, stride = 1;
  for (int k = 0; k < dim; ++k) {
    const double u = (y[k] - lo) / (hi - lo) * bins;
    if (!(u >= 0.0) || u >= bins) return -1;
    index += static_cast<long>(u) * stride;
    stride *= bins;
  }
  return index;
}

double Binning::volume(std::size_t bin) const {
  if (kind == Kind::radial) {
    return unit_ball_volume(dim) * (std::pow(edges[bin + 1], dim) - std::pow(edges[bin], dim));
  }
  return std::pow((hi - lo) / bins, dim);
}

Point Binning::center(std::size_t bin, const Point& x0) const {
  Point p{};
  if (kind == Kind::radial) {
    p = x0;
    p[0] += 0.5 * (edges[bin] + edges[bin + 1]);
    return p;
  }
  const double w = (hi - lo) / bins;
  for (int k = 0; k < dim; ++k) {
    p[k] = lo + (static_cast<double>(bin % bins) + 0.5) * w;
    bin /= bins;
  }
  return p;
}

std::pair<double, double> Binning::distance_range(std::size_t bin, const Point& x0) const {
  if (kind == Kind::radial) return {edges[bin], edges[bin + 1]};
  const double w = (hi - lo) / bins;
  const Point c = center(bin, x0);
  double near = 0.0, far = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double a = c[k] - 0.5 * w - x0[k], b = c[k] + 0.5 * w - x0[k];
    const double dn = a > 0.0 ? a : (b < 0.0 ? -b : 0.0);
    const double df = std::max(std::abs(a), std::abs(b));
    near += dn * dn;
    far += df * df;
  }
  return {std::sqrt(near), std::sqrt(far)};
}

double DensityEstimate::histogram_mass() const {
  std::uint64_t c = 0;
  for (auto v : counts) c += v;
  return static_cast<double>(c) / static_cast<double>(paths);
}

DensityEstimate estimate_density(const Sampler& sampler, const Point& x0, double t, std::uint64_t N,
                                 const Binning& binning, const MonteCarloOptions& options) {
  if (N < 1) throw PreconditionError("estimate_density: need at least one path");
  if (binning.dim != sampler.context().kernel().dim()) throw PreconditionError("estimate_density: dimension mismatch");
  const std::size_t B = binning.size();
  const std::uint64_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<std::vector<std::uint64_t>> local(chunks);
  std::vector<std::uint64_t> atoms(chunks, 0), outside(chunks, 0);
  detail::parallel_for(
      chunks,
      [&](std::size_t c) {
        std::vector<std::uint64_t> counts(B, 0);
        const std::uint64_t end = std::min<std::uint64_t>(N, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) {
          PathStream stream(options.seed, options.first_path + i);
          const PathEndpoint p = sample_endpoint(sampler, x0, t, stream);
          if (!p.moved) {
            ++atoms[c];
            continue;
          }
          const long bin = binning.locate(p.endpoint, x0);
          if (bin < 0) {
            ++outside[c];
          } else {
            ++counts[static_cast<std::size_t>(bin)];
          }
        }
        local[c] = std::move(counts);
      },
      options.workers);

  DensityEstimate est;
  est.binning = binning;
  est.start = x0;
  est.t = t;
  est.alpha = sampler.context().kernel().alpha();
  est.paths = N;
  est.counts.assign(B, 0);
  for (std::uint64_t c = 0; c < chunks; ++c) {
    est.atom_count += atoms[c];
    est.out_of_range += outside[c];
    for (std::size_t b = 0; b < B; ++b) est.counts[b] += local[c][b];
  }
  const double n = static_cast<double>(N);
  est.atom_mass = static_cast<double>(est.atom_count) / n;
  est.out_of_range_mass = static_cast<double>(est.out_of_range) / n;
  est.density.resize(B);
  est.std_error.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double p = static_cast<double>(est.counts[b]) / n;
    const double v = binning.volume(b);
    est.density[b] = p / v;
    est.std_error[b] = std::sqrt(p * (1.0 - p) / n) / v;
  }
  if (t * sampler.b_bar() < 0.1) est.warnings.push_back("t * b_bar is small; almost all mass sits in the atom");
  if (est.atom_count + est.out_of_range == N) est.warnings.push_back("empty histogram");
  return est;
}

}  // namespace stabledom
