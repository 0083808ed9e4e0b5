#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stabledom/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for stable-dominated jump kernels"};
  std::string config;
  std::string subcommand = "all";
  stabledom::RunFlags flags;
  std::uint64_t seed = 0;
  std::string out;

  app.add_option("subcommand", subcommand, "verify | iterate | apply | sample | bounds | all")
      ->check(CLI::IsMember({"verify", "iterate", "apply", "sample", "bounds", "all"}));
  app.add_option("--config", config, "experiment config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Monte Carlo master seed");
  app.add_option("--workers", flags.workers, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  auto* out_opt = app.add_option("--out", out, "output directory");
  app.add_option("--tolerance-scale", flags.tolerance_scale, "multiplies every tolerance")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) flags.seed = seed;
  if (*out_opt) flags.out = out;

  stabledom::RunResult result;
  try {
    result = stabledom::run(config, subcommand, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (result.exit_code == 2) {
    std::cerr << "config error: " << result.summary.value("error", std::string("unknown")) << '\n';
    return 2;
  }
  for (const auto& r : result.reports) {
    std::printf("%-4s %s%s\n", r.pass ? "PASS" : (r.gated ? "FAIL" : "info"), r.check.c_str(),
                r.pass || r.notes.empty() ? "" : ("  (" + r.notes + ")").c_str());
  }
  for (const auto& a : result.artifacts) std::printf("wrote %s\n", a.string().c_str());
  return result.exit_code;
}
