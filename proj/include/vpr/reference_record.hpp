#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vpr/uasc.hpp"

namespace vpr::reference {

// Five sampled verdicts for one matching pair, as emitted by a served model (two of
// them fenced as markdown), together with the published calibration of that record.
const std::vector<std::string>& raw_outputs();

inline constexpr double kParsedScores[] = {0.9, 0.8, 0.9, 0.95, 0.85};
inline constexpr double kMean = 0.8799999999999999;
inline constexpr double kStdDev = 0.050990195135927834;
inline constexpr double kLambda = 0.5;
inline constexpr int kNumValid = 5;
inline constexpr double kFinal = 0.854504902432036;
inline constexpr double kTolerance = 1e-12;

struct CheckResult {
  bool passed = false;
  UascResult result;
  std::vector<std::string> failures;
};

// Runs the raw outputs through the codec and calibration (lambda 0.5, population
// variance) and, when `through_pipeline` is set, also through a mock-served pair score.
CheckResult run_check(bool through_pipeline = true);

}  // namespace vpr::reference
