#pragma once

#include <filesystem>
#include <string>

#include "safetrack/scenario.hpp"

namespace safetrack::testing {

inline std::filesystem::path bundled_scenario_path() {
  return std::filesystem::path(SAFETRACK_SCENARIO_DIR) / "two_link_baseline.json";
}

inline Scenario bundled_scenario() { return load_scenario(bundled_scenario_path()); }

inline TwoLinkParams nominal_params() { return TwoLinkParams{3.473, 0.196, 0.242, 5.3, 1.1}; }

inline ConstraintSpec nominal_constraints() { return ConstraintSpec{3.6, 2.1, 5.0, 2.0, 0.6}; }

}  // namespace safetrack::testing
