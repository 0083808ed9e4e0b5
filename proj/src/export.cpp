#include "stabledom/export.hpp"

#include <cstdio>
#include <fstream>

#include "stabledom/errors.hpp"

namespace stabledom {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

void coords_header(std::ostream& out, int dim, const char* prefix) {
  for (int k = 0; k < dim; ++k) out << ',' << prefix << k;
}

void coords(std::ostream& out, const Point& p, int dim) {
  for (int k = 0; k < dim; ++k) out << ',' << num(p[k]);
}

}  // namespace

void write_semigroup_csv(const std::filesystem::path& path, const Field& phi,
                         std::span<const SemigroupEvaluation> evaluations) {
  auto out = open(path);
  const Lattice& lat = phi.lattice();
  out << "node";
  coords_header(out, lat.dim(), "x");
  out << ",phi,t,value\n";
  for (const auto& ev : evaluations) {
    for (std::size_t i = 0; i < lat.size(); ++i) {
      out << i;
      coords(out, lat.point(i), lat.dim());
      out << ',' << num(phi[i]) << ',' << num(ev.t) << ',' << num(ev.result[i]) << '\n';
    }
  }
}

void write_iterated_csv(const std::filesystem::path& path, const Lattice& lattice,
                        std::span<const IteratedKernel> iterated) {
  auto out = open(path);
  out << "order,node";
  coords_header(out, lattice.dim(), "x");
  out << ",mass,density,atom_weight\n";
  for (const auto& it : iterated) {
    for (std::size_t j = 0; j < it.mass.size(); ++j) {
      out << it.order << ',' << j;
      coords(out, lattice.point(j), lattice.dim());
      out << ',' << num(it.mass[j]) << ',' << num(it.density(j, lattice.weight())) << ',' << num(it.atom_weight)
          << '\n';
    }
  }
}

void write_density_csv(const std::filesystem::path& path, const DensityEstimate& est) {
  auto out = open(path);
  const Binning& b = est.binning;
  out << "# atom_mass=" << num(est.atom_mass) << ",out_of_range_mass=" << num(est.out_of_range_mass)
      << ",paths=" << est.paths << ",t=" << num(est.t) << '\n';
  out << "bin";
  coords_header(out, b.dim, "center");
  out << ",r_min,r_max,count,density,std_error\n";
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto [r0, r1] = b.distance_range(i, est.start);
    out << i;
    coords(out, b.center(i, est.start), b.dim);
    out << ',' << num(r0) << ',' << num(r1) << ',' << est.counts[i] << ',' << num(est.density[i]) << ','
        << num(est.std_error[i]) << '\n';
  }
}

void write_reference_csv(const std::filesystem::path& path, double alpha, int dim, double t,
                         std::span<const double> radii) {
  auto out = open(path);
  out << "alpha,dim,t,x,density\n";
  for (double r : radii) {
    out << num(alpha) << ',' << dim << ',' << num(t) << ',' << num(r) << ','
        << num(reference_density(alpha, dim, t, Point{r})) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open(path);
  out << value.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open(path);
  out << text;
}

}  // namespace stabledom
