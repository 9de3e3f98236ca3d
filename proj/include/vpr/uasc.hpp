#pragma once

// Uncertainty-aware self-consistency: N sampled verdicts for one image pair are
// reduced to mean - lambda * stddev, clamped to [0, 1]. Pairs whose samples agree
// keep their mean; pairs the model is unsure about are pushed down.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpr/codec.hpp"

namespace vpr {

enum class VarianceMode {
  population,  // divide by |S|
  sample,      // divide by |S| - 1
};

std::string_view to_string(VarianceMode mode);
VarianceMode parse_variance_mode(std::string_view value);

struct CalibrationConfig {
  double lambda = 0.5;
  VarianceMode variance_mode = VarianceMode::population;
  int n_samples = 5;

  void validate() const;  // InvalidConfig
  bool operator==(const CalibrationConfig&) const = default;
};

// Valid similarity scores, each in [0, 1], in sample-index order.
class ScoreSet {
 public:
  ScoreSet() = default;
  explicit ScoreSet(std::vector<double> scores);  // InvalidRecord on an element outside [0, 1]

  const std::vector<double>& scores() const { return scores_; }
  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }

 private:
  std::vector<double> scores_;
};

struct SampleDetail {
  int sample_index = 0;
  std::string raw_output;
  std::string status;  // "Success" or the parse failure
  std::optional<double> parsed_score;

  bool operator==(const SampleDetail&) const = default;
};

struct UascResult {
  double mean = 0.0;
  double stddev = 0.0;
  double lambda = 0.0;
  int num_valid_samples = 0;
  double calibrated = 0.0;
  double final_score = 0.0;
  std::vector<SampleDetail> per_sample;
  // Verdict text of the first valid sample, reported alongside the scores.
  std::optional<ScoredResponse> representative;

  bool operator==(const UascResult&) const = default;
};

struct Calibrated {
  double calibrated;
  double final_score;
};

ScoreSet collect_valid_scores(std::span<const ParseOutcome> outcomes);

// Both statistics are accumulated over the scores in ascending order, which makes
// them exactly invariant to the order the samples arrived in.
double mean_score(const ScoreSet& scores);                     // EmptyScoreSet
double std_score(const ScoreSet& scores, VarianceMode mode);   // EmptyScoreSet; 0 for a single score

Calibrated calibrate_and_clamp(double mean, double stddev, double lambda);

// outcomes[i] is sample i. Throws NoValidSamples when no outcome carries a usable score.
UascResult run_uasc(std::span<const ParseOutcome> outcomes, const CalibrationConfig& cfg);

// Record layout: similarity_score, uncertainty_metrics{mean_score, std_dev, lambda,
// num_valid_samples}, sc_details[{sample_index, raw_output, status, parsed_score}].
nlohmann::json to_json(const UascResult& result);
UascResult uasc_result_from_json(const nlohmann::json& doc);

}  // namespace vpr
