#pragma once

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace stabledom {

/// Outcome of one numerical inequality check.
///
/// `fitted_constant` is the smallest C that makes the inequality hold on all
/// sampled configurations. When the inequality carries a declared constant,
/// `worst_ratio` is fitted / declared and the check passes iff it is <= 1
/// (after error bars). Checks whose constant is only known to exist pass on
/// finiteness plus a stability criterion recorded in `metrics`.
struct BoundReport {
  std::string check;
  nlohmann::json configurations = nlohmann::json::array();
  double worst_ratio = 0.0;
  double fitted_constant = 0.0;
  double declared_constant = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  bool gated = true;
  std::string notes;
  nlohmann::json metrics = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const BoundReport& r);

/// Markdown table with one row per report.
std::string to_markdown(const std::vector<BoundReport>& reports);

/// True iff every gated report passed.
bool all_gated_pass(const std::vector<BoundReport>& reports);

}  // namespace stabledom
