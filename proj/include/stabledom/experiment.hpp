#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/kernels.hpp"
#include "stabledom/lattice.hpp"
#include "stabledom/montecarlo.hpp"
#include "stabledom/report.hpp"
#include "stabledom/verifier.hpp"

namespace stabledom {

struct Tolerances {
  double mass_identity = 1e-2;
  double series_tail = 1e-10;
  double drift = 0.2;
  double stability = 2.0;     ///< allowed max/min ratio of fitted constants across eps
  double kappa_min = 0.02;
  double conservation = 1e-3;
  double slope = 0.3;         ///< allowed deviation of the generator convergence order
};

struct MonteCarloSpec {
  bool enabled = false;
  std::uint64_t paths = 20000;
  std::uint64_t seed = 1;
  Point start{};
  Binning binning;
};

/// A batch experiment read from JSON. See README.md for the schema.
struct ExperimentConfig {
  nlohmann::json kernel;  ///< built-in kernel description (see kernel_from_json)
  std::vector<double> eps = {0.5, 0.25};
  double half_width = 40.0;
  int points_per_axis = 1024;
  std::vector<double> times = {0.1, 0.5, 1.0};
  std::vector<TestFunction> functions;
  MonteCarloSpec montecarlo;
  std::vector<std::string> checks;  ///< empty selects every check
  std::filesystem::path output = "stabledom_out";
  Tolerances tolerances;
  int max_order = 20;
  BoundaryMode boundary = BoundaryMode::lumped;

  /// Throws ConfigError on malformed input or failed validation.
  static ExperimentConfig parse(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Kernel exists, eps sweep nonempty and positive, spacing below min eps, tolerances positive.
  void validate() const;
  JumpKernel make_kernel() const;
  bool selected(const std::string& check) const;
  nlohmann::json to_json() const;
  /// 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;
};

enum class Subcommand { verify, iterate, apply, sample, bounds, all };

/// Throws ConfigError for unknown names.
Subcommand parse_subcommand(const std::string& name);

struct RunFlags {
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::optional<std::filesystem::path> out;
  double tolerance_scale = 1.0;  ///< multiplies every tolerance
};

struct RunResult {
  int exit_code = 0;  ///< 0 pass, 1 check failure, 2 usage or config error
  std::vector<BoundReport> reports;
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json summary;
};

/// Runs one pipeline stage (or all) and writes artifacts named after the config hash.
RunResult run(ExperimentConfig config, Subcommand subcommand, const RunFlags& flags = {});

/// Loads the config, runs, and maps ConfigError to exit code 2.
RunResult run(const std::filesystem::path& config_path, const std::string& subcommand, const RunFlags& flags = {});

}  // namespace stabledom
