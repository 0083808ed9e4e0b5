#include "stabledom/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "stabledom/errors.hpp"
#include "stabledom/export.hpp"
#include "stabledom/semigroup.hpp"

namespace stabledom {

namespace {

const std::set<std::string> kChecks = {"assumptions",  "mass_identity", "estimates",    "subharmonicity",
                                       "series_lemma", "limit_generator", "main_theorem", "density_bound",
                                       "conservation", "mass_partition"};

std::vector<double> number_list(const nlohmann::json& j, const char* what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else {
    throw ConfigError(std::string(what) + " must be a number or an array of numbers");
  }
  return out;
}

Point point_value(const nlohmann::json& j) {
  Point p{};
  if (j.is_number()) {
    p[0] = j.get<double>();
  } else {
    for (std::size_t k = 0; k < j.size() && k < static_cast<std::size_t>(kMaxDim); ++k) p[k] = j[k].get<double>();
  }
  return p;
}

nlohmann::json point_json(const Point& p, int dim) {
  auto j = nlohmann::json::array();
  for (int k = 0; k < dim; ++k) j.push_back(p[k]);
  return j;
}

std::string fmt_index(const char* prefix, std::size_t k) { return std::string(prefix) + std::to_string(k); }

BoundReport error_report(const std::string& module, const std::exception& e) {
  BoundReport r;
  r.check = "error:" + module;
  r.pass = false;
  r.notes = e.what();
  return r;
}

}  // namespace

// --- config -------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    if (!j.contains("kernel") || !j.at("kernel").is_object()) throw ConfigError("config: missing kernel object");
    c.kernel = j.at("kernel");
    if (j.contains("eps")) c.eps = number_list(j.at("eps"), "eps");
    if (j.contains("lattice")) {
      const auto& l = j.at("lattice");
      c.half_width = l.value("R", c.half_width);
      c.points_per_axis = l.value("n", c.points_per_axis);
    }
    if (j.contains("times")) c.times = number_list(j.at("times"), "times");
    const int dim = c.kernel.value("dim", 1);
    if (j.contains("functions")) {
      for (const auto& f : j.at("functions")) c.functions.push_back(test_function_from_json(f));
    } else {
      c.functions = default_test_functions(dim);
    }
    c.montecarlo.binning = Binning::grid(std::clamp(dim, 1, kMaxDim), -5.0, 5.0, dim == 1 ? 50 : 20);
    if (j.contains("montecarlo")) {
      const auto& m = j.at("montecarlo");
      c.montecarlo.enabled = m.value("enabled", true);
      c.montecarlo.paths = m.value("paths", c.montecarlo.paths);
      c.montecarlo.seed = m.value("seed", c.montecarlo.seed);
      if (m.contains("start")) c.montecarlo.start = point_value(m.at("start"));
      if (m.contains("bins")) {
        const auto& b = m.at("bins");
        const std::string kind = b.value("kind", std::string("grid"));
        if (kind == "grid") {
          c.montecarlo.binning = Binning::grid(dim, b.value("lo", -5.0), b.value("hi", 5.0), b.value("bins", 50));
        } else if (kind == "radial") {
          c.montecarlo.binning = Binning::radial(dim, number_list(b.at("edges"), "bins.edges"));
        } else {
          throw ConfigError("montecarlo.bins.kind must be grid or radial");
        }
      }
    }
    if (j.contains("checks")) {
      for (const auto& s : j.at("checks")) {
        const auto name = s.get<std::string>();
        if (!kChecks.count(name)) throw ConfigError("config: unknown check '" + name + "'");
        c.checks.push_back(name);
      }
    }
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      auto& tol = c.tolerances;
      tol.mass_identity = t.value("mass_identity", tol.mass_identity);
      tol.series_tail = t.value("series_tail", tol.series_tail);
      tol.drift = t.value("drift", tol.drift);
      tol.stability = t.value("stability", tol.stability);
      tol.kappa_min = t.value("kappa_min", tol.kappa_min);
      tol.conservation = t.value("conservation", tol.conservation);
      tol.slope = t.value("slope", tol.slope);
    }
    c.max_order = j.value("max_order", c.max_order);
    const std::string boundary = j.value("boundary", std::string("lumped"));
    if (boundary == "lumped") {
      c.boundary = BoundaryMode::lumped;
    } else if (boundary == "absorbing") {
      c.boundary = BoundaryMode::absorbing;
    } else {
      throw ConfigError("config: boundary must be lumped or absorbing");
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse(j);
}

JumpKernel ExperimentConfig::make_kernel() const { return kernel_from_json(kernel); }

void ExperimentConfig::validate() const {
  const JumpKernel k = make_kernel();
  if (eps.empty()) throw ConfigError("config: eps sweep is empty");
  for (double e : eps) {
    if (!(e > 0.0)) throw ConfigError("config: eps values must be positive");
  }
  if (!(half_width > 0.0) || points_per_axis < 2) throw ConfigError("config: lattice needs R > 0 and n >= 2");
  const double spacing = 2.0 * half_width / points_per_axis;
  if (!(spacing < *std::min_element(eps.begin(), eps.end()))) {
    throw ConfigError("config: lattice spacing " + std::to_string(spacing) + " must be below the smallest eps");
  }
  if (times.empty()) throw ConfigError("config: times are empty");
  for (double t : times) {
    if (!(t > 0.0)) throw ConfigError("config: times must be positive");
  }
  const auto& t = tolerances;
  for (double v : {t.mass_identity, t.series_tail, t.drift, t.stability, t.kappa_min, t.conservation, t.slope}) {
    if (!(v > 0.0)) throw ConfigError("config: tolerances must be positive");
  }
  if (max_order < 1) throw ConfigError("config: max_order must be >= 1");
  if (montecarlo.enabled && montecarlo.paths < 100) throw ConfigError("config: montecarlo.paths must be >= 100");
  if (montecarlo.binning.dim != k.dim()) throw ConfigError("config: binning dimension differs from the kernel");
}

bool ExperimentConfig::selected(const std::string& check) const {
  return checks.empty() || std::find(checks.begin(), checks.end(), check) != checks.end();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : functions) fs.push_back(f.to_json());
  const auto& b = montecarlo.binning;
  return {{"kernel", kernel},
          {"eps", eps},
          {"lattice", {{"R", half_width}, {"n", points_per_axis}}},
          {"times", times},
          {"functions", fs},
          {"montecarlo",
           {{"enabled", montecarlo.enabled},
            {"paths", montecarlo.paths},
            {"seed", montecarlo.seed},
            {"start", point_json(montecarlo.start, kMaxDim)},
            {"bins",
             {{"kind", b.kind == Binning::Kind::grid ? "grid" : "radial"},
              {"lo", b.lo},
              {"hi", b.hi},
              {"bins", b.bins},
              {"edges", b.edges}}}}},
          {"checks", checks},
          {"output", output.string()},
          {"tolerances",
           {{"mass_identity", tolerances.mass_identity},
            {"series_tail", tolerances.series_tail},
            {"drift", tolerances.drift},
            {"stability", tolerances.stability},
            {"kappa_min", tolerances.kappa_min},
            {"conservation", tolerances.conservation},
            {"slope", tolerances.slope}}},
          {"max_order", max_order},
          {"boundary", boundary == BoundaryMode::lumped ? "lumped" : "absorbing"}};
}

std::string ExperimentConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("output");  // the same experiment hashes alike wherever it is written
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Subcommand parse_subcommand(const std::string& name) {
  static const std::map<std::string, Subcommand> table = {{"verify", Subcommand::verify},
                                                          {"iterate", Subcommand::iterate},
                                                          {"apply", Subcommand::apply},
                                                          {"sample", Subcommand::sample},
                                                          {"bounds", Subcommand::bounds},
                                                          {"all", Subcommand::all}};
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown subcommand '" + name + "'");
  return it->second;
}

// --- pipeline -----------------------------------------------------------------------

namespace {

class Pipeline {
 public:
  Pipeline(ExperimentConfig config, const RunFlags& flags)
      : cfg_(std::move(config)), kernel_(cfg_.make_kernel()), flags_(flags), prefix_(cfg_.hash()) {}

  RunResult execute(Subcommand sub) {
    const bool all = sub == Subcommand::all;
    if (all || sub == Subcommand::verify) stage("kernels", [&] { verify(); });
    if (all || sub == Subcommand::iterate) stage("lattice", [&] { iterate(); });
    if (all || sub == Subcommand::apply) stage("semigroup", [&] { apply(); });
    if (all || sub == Subcommand::sample) stage("montecarlo", [&] { sample(); });
    if (all || sub == Subcommand::bounds) stage("verifier", [&] { bounds(); });

    result_.exit_code = all_gated_pass(result_.reports) ? 0 : 1;
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : result_.reports) reports.push_back(r);
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : result_.artifacts) artifacts.push_back(a.filename().string());
    result_.summary = {{"hash", prefix_},
                       {"kernel", kernel_.describe()},
                       {"config", cfg_.to_json()},
                       {"pass", result_.exit_code == 0},
                       {"reports", reports},
                       {"artifacts", artifacts}};
    const auto json_path = path("summary.json");
    const auto md_path = path("summary.md");
    write_json(json_path, result_.summary);
    write_text(md_path, to_markdown(result_.reports));
    result_.artifacts.push_back(json_path);
    result_.artifacts.push_back(md_path);
    return result_;
  }

 private:
  std::filesystem::path path(const std::string& name) const { return cfg_.output / (prefix_ + "_" + name); }

  template <typename F>
  void stage(const std::string& module, F&& body) {
    try {
      body();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      result_.reports.push_back(error_report(module, e));
    }
  }

  void add(BoundReport r, const std::string& suffix = "") {
    if (!suffix.empty()) r.check += "[" + suffix + "]";
    result_.reports.push_back(std::move(r));
  }

  std::string eps_label(std::size_t k) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "eps=%g", cfg_.eps[k]);
    return buf;
  }

  const DiscreteKernel& lattice_kernel(std::size_t k) {
    if (!discrete_.count(k)) {
      const TruncationContext ctx = make_context(kernel_, cfg_.eps[k]);
      const Lattice lat(kernel_.dim(), cfg_.half_width, cfg_.points_per_axis);
      discrete_.emplace(k, discretize_kernel(ctx, lat));
    }
    return discrete_.at(k);
  }

  const std::vector<IteratedKernel>& iterates(std::size_t k) {
    if (!iterated_.count(k)) {
      const DiscreteKernel& dk = lattice_kernel(k);
      IterationOptions opts;
      opts.tolerance = cfg_.tolerances.mass_identity;
      iterated_[k] = iterate_kernels(dk, dk.lattice().center(), cfg_.max_order, opts);
    }
    return iterated_.at(k);
  }

  void verify() {
    if (!cfg_.selected("assumptions")) return;
    const AssumptionReport a = verify_assumptions(kernel_, AssumptionSamplePlan{});
    for (auto r : a.reports()) add(std::move(r));
  }

  void iterate() {
    for (std::size_t k = 0; k < cfg_.eps.size(); ++k) {
      const auto& it = iterates(k);
      const auto file = path(fmt_index("iterated_eps", k) + ".csv");
      write_iterated_csv(file, lattice_kernel(k).lattice(), it);
      result_.artifacts.push_back(file);
      if (cfg_.selected("mass_identity")) add(check_mass_identity(it, cfg_.tolerances.mass_identity), eps_label(k));
    }
  }

  void apply() {
    SeriesOptions series;
    series.mode = cfg_.boundary;
    for (std::size_t k = 0; k < cfg_.eps.size(); ++k) {
      const DiscreteKernel& dk = lattice_kernel(k);
      const Lattice& lat = dk.lattice();
      for (std::size_t f = 0; f < cfg_.functions.size(); ++f) {
        const auto& phi = cfg_.functions[f];
        const Field field = Field::sample(lat, [&](const Point& y) { return phi(y); });
        const auto evals = apply_semigroup(dk, field, cfg_.times, series);
        const auto file = path(fmt_index("semigroup_eps", k) + "_" + phi.name + ".csv");
        write_semigroup_csv(file, field, evals);
        result_.artifacts.push_back(file);
      }
      if (cfg_.selected("conservation")) {
        const auto evals = apply_semigroup(dk, Field(lat, 1.0), cfg_.times, series);
        BoundReport r;
        r.check = "conservation";
        r.declared_constant = cfg_.tolerances.conservation;
        for (const auto& ev : evals) {
          const double defect = std::abs(ev.result[lat.center()] - 1.0);
          r.fitted_constant = std::max(r.fitted_constant, defect);
          r.configurations.push_back({{"t", ev.t}, {"defect", defect}, {"terms", ev.order}});
        }
        r.worst_ratio = r.fitted_constant / cfg_.tolerances.conservation;
        r.pass = r.worst_ratio < 1.0;
        r.notes = "|e^{tA}1 - 1| at the box centre";
        add(std::move(r), eps_label(k));
      }
    }
    const JumpKernel iso = isotropic(kernel_.alpha(), kernel_.dim());
    if (kernel_.name() == iso.name() && kernel_.dim() <= 2) {
      std::vector<double> radii;
      for (int i = 0; i <= 100; ++i) radii.push_back(0.1 * i);
      for (double t : cfg_.times) {
        char name[64];
        std::snprintf(name, sizeof name, "reference_t%g.csv", t);
        write_reference_csv(path(name), kernel_.alpha(), kernel_.dim(), t, radii);
        result_.artifacts.push_back(path(name));
      }
    }
  }

  const DensityEstimate& density(std::size_t k, std::size_t ti) {
    const auto key = std::make_pair(k, ti);
    if (!densities_.count(key)) {
      if (!samplers_.count(k)) samplers_.emplace(k, Sampler(make_context(kernel_, cfg_.eps[k])));
      MonteCarloOptions mc;
      mc.seed = cfg_.montecarlo.seed;
      mc.workers = flags_.workers;
      densities_.emplace(key, estimate_density(samplers_.at(k), cfg_.montecarlo.start, cfg_.times[ti],
                                               cfg_.montecarlo.paths, cfg_.montecarlo.binning, mc));
    }
    return densities_.at(key);
  }

  void sample() {
    if (!cfg_.montecarlo.enabled) return;
    for (std::size_t k = 0; k < cfg_.eps.size(); ++k) {
      for (std::size_t ti = 0; ti < cfg_.times.size(); ++ti) {
        const DensityEstimate& est = density(k, ti);
        const auto file = path(fmt_index("density_eps", k) + fmt_index("_t", ti) + ".csv");
        write_density_csv(file, est);
        result_.artifacts.push_back(file);
        if (cfg_.selected("mass_partition")) {
          BoundReport r;
          r.check = "mass_partition";
          const std::uint64_t hist = est.paths - est.atom_count - est.out_of_range;
          std::uint64_t counted = 0;
          for (auto c : est.counts) counted += c;
          r.pass = counted == hist;
          r.fitted_constant = est.atom_mass;
          r.configurations.push_back({{"t", est.t}, {"atom_mass", est.atom_mass}, {"warnings", est.warnings}});
          r.notes = "atom + histogram + out-of-range counts equal the path count";
          add(std::move(r), eps_label(k) + fmt_index(",t#", ti));
        }
      }
    }
  }

  void bounds() {
    const int d = kernel_.dim();
    const double alpha = kernel_.alpha();
    if (cfg_.selected("subharmonicity")) {
      const auto samples = default_subharmonicity_samples(d, 50, cfg_.eps);
      SubharmonicityOptions opts;
      opts.kappa_min = cfg_.tolerances.kappa_min;
      add(check_subharmonicity(kernel_, samples, opts).report);
    }
    if (cfg_.selected("estimates")) {
      EstimateOptions opts;
      opts.max_drift = cfg_.tolerances.drift;
      opts.drift_from = std::max(1, cfg_.max_order / 2);
      opts.drift_to = cfg_.max_order;
      for (std::size_t k = 0; k < cfg_.eps.size(); ++k) {
        for (int which = 1; which <= 3; ++which) {
          add(check_estimates(lattice_kernel(k), iterates(k), which, opts), eps_label(k));
        }
      }
    }
    if (cfg_.selected("series_lemma")) {
      std::vector<double> ps = {0.0, 0.5, 1.0, 2.0, d / alpha};
      std::sort(ps.begin(), ps.end());
      ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
      std::vector<double> xs;
      for (int i = 1; i <= 400; ++i) xs.push_back(20.0 * i / 400.0);
      add(check_series_lemma(ps, xs));
    }
    if (cfg_.selected("limit_generator") && (kernel_.traits().sym_h || alpha < 1.0)) {
      std::vector<double> sweep = cfg_.eps;
      if (sweep.size() < 4) sweep = {0.5, 0.25, 0.125, 0.0625, 0.03125};
      std::vector<Point> points = {Point{-1.0}, Point{-0.5}, Point{0.0}, Point{0.5}, Point{1.0}};
      const auto res = apply_limit_generator(kernel_, Bump::gaussian(), points, sweep);
      BoundReport r;
      r.check = "limit_generator";
      r.fitted_constant = res.slope;
      r.declared_constant = res.expected_slope;
      r.worst_ratio = std::abs(res.slope - res.expected_slope) / cfg_.tolerances.slope;
      r.pass = std::isfinite(res.slope) && r.worst_ratio <= 1.0;
      r.metrics = res.to_json();
      r.notes = "log-log slope of sup |A phi - A_eps phi| against eps";
      add(std::move(r));
    }
    if (cfg_.selected("main_theorem") && d <= 2) {
      MainTheoremOptions opts;
      opts.eps = cfg_.eps;
      opts.times = cfg_.times;
      opts.half_width = cfg_.half_width;
      opts.points_per_axis = cfg_.points_per_axis;
      opts.stability_factor = cfg_.tolerances.stability;
      opts.series.mode = cfg_.boundary;
      add(check_main_theorem(kernel_, cfg_.functions, opts));
    }
    if (cfg_.selected("density_bound") && cfg_.montecarlo.enabled) {
      DensityBoundOptions opts;
      opts.stability_factor = cfg_.tolerances.stability;
      for (std::size_t ti = 0; ti < cfg_.times.size(); ++ti) {
        std::vector<DensityEstimate> ests;
        for (std::size_t k = 0; k < cfg_.eps.size(); ++k) ests.push_back(density(k, ti));
        char label[32];
        std::snprintf(label, sizeof label, "t=%g", cfg_.times[ti]);
        add(check_density_bound(ests, cfg_.eps, opts), label);
      }
    }
  }

  ExperimentConfig cfg_;
  JumpKernel kernel_;
  RunFlags flags_;
  std::string prefix_;
  RunResult result_;
  std::map<std::size_t, DiscreteKernel> discrete_;
  std::map<std::size_t, std::vector<IteratedKernel>> iterated_;
  std::map<std::size_t, Sampler> samplers_;
  std::map<std::pair<std::size_t, std::size_t>, DensityEstimate> densities_;
};

}  // namespace

RunResult run(ExperimentConfig config, Subcommand subcommand, const RunFlags& flags) {
  if (flags.seed) config.montecarlo.seed = *flags.seed;
  if (flags.out) config.output = *flags.out;
  if (!(flags.tolerance_scale > 0.0)) throw ConfigError("--tolerance-scale must be positive");
  if (flags.tolerance_scale != 1.0) {
    auto& t = config.tolerances;
    for (double* v : {&t.mass_identity, &t.series_tail, &t.drift, &t.stability, &t.kappa_min, &t.conservation,
                      &t.slope}) {
      *v *= flags.tolerance_scale;
    }
  }
  if (flags.workers < 0) throw ConfigError("--workers must be >= 0");
  if (flags.workers > 0) omp_set_num_threads(flags.workers);
  config.validate();
  Pipeline pipeline(std::move(config), flags);
  return pipeline.execute(subcommand);
}

RunResult run(const std::filesystem::path& config_path, const std::string& subcommand, const RunFlags& flags) {
  try {
    return run(ExperimentConfig::load(config_path), parse_subcommand(subcommand), flags);
  } catch (const ConfigError& e) {
    RunResult r;
    r.exit_code = 2;
    r.summary = {{"error", e.what()}};
    return r;
  }
}

}  // namespace stabledom
