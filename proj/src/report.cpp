#include "stabledom/report.hpp"

#include <cmath>
#include <sstream>

namespace stabledom {

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json{{"check", r.check},
                     {"pass", r.pass},
                     {"gated", r.gated},
                     {"worst_ratio", finite_or_null(r.worst_ratio)},
                     {"fitted_constant", finite_or_null(r.fitted_constant)},
                     {"declared_constant", finite_or_null(r.declared_constant)},
                     {"notes", r.notes},
                     {"metrics", r.metrics},
                     {"configurations", r.configurations}};
}

std::string to_markdown(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os << "| check | result | worst ratio | fitted C | declared C | notes |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    os << "| " << r.check << " | " << (r.pass ? "pass" : "FAIL") << (r.gated ? "" : " (not gated)")
       << " | " << r.worst_ratio << " | " << r.fitted_constant << " | ";
    if (std::isfinite(r.declared_constant)) os << r.declared_constant;
    os << " | " << r.notes << " |\n";
  }
  return os.str();
}

bool all_gated_pass(const std::vector<BoundReport>& reports) {
  for (const auto& r : reports) {
    if (r.gated && !r.pass) return false;
  }
  return true;
}

}  // namespace stabledom
