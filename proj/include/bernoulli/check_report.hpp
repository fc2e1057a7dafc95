// ============================================================================
// check_report.hpp -- uniform result record for inequality / property checks.
// ============================================================================
#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace bernoulli {

/// Outcome of a single verification check: the quantities that entered it,
/// the computed values, the signed margins (nonnegative means the inequality
/// holds), the tolerances applied, and the verdict.
struct CheckReport {
  std::string name;
  nlohmann::json inputs;
  nlohmann::json computed;
  nlohmann::json margins;
  nlohmann::json tolerances;
  bool pass = false;
  double wall_time_s = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"name", name},       {"inputs", inputs},
            {"computed", computed}, {"margins", margins},
            {"tolerances", tolerances}, {"pass", pass},
            {"wall_time_s", wall_time_s}};
  }
};

}  // namespace bernoulli
