#include "vpr/uasc.hpp"

#include <algorithm>
#include <cmath>

#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;

std::string_view to_string(VarianceMode mode) { return mode == VarianceMode::population ? "population" : "sample"; }

VarianceMode parse_variance_mode(std::string_view value) {
  if (value == "population") return VarianceMode::population;
  if (value == "sample") return VarianceMode::sample;
  throw Error(ErrorCode::InvalidConfig, "unknown variance mode '" + std::string(value) + "'");
}

void CalibrationConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw Error(ErrorCode::InvalidConfig, "lambda must be finite and >= 0");
  if (n_samples < 1) throw Error(ErrorCode::InvalidConfig, "sample count must be >= 1");
}

ScoreSet::ScoreSet(std::vector<double> scores) : scores_(std::move(scores)) {
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::InvalidRecord, "score outside [0, 1]: " + std::to_string(s));
  }
}

ScoreSet collect_valid_scores(std::span<const ParseOutcome> outcomes) {
  std::vector<double> scores;
  for (const auto& outcome : outcomes) {
    if (outcome.valid()) scores.push_back(outcome.response->similarity_score);
  }
  return ScoreSet(std::move(scores));
}

namespace {

std::vector<double> ascending(const ScoreSet& s) {
  if (s.empty()) throw Error(ErrorCode::EmptyScoreSet, "no scores");
  std::vector<double> sorted = s.scores();
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

// Unanimous samples short-circuit: summing n copies of c and dividing by n
// need not give c back exactly, and the deviation must be exactly zero.
bool unanimous(const std::vector<double>& sorted) { return sorted.front() == sorted.back(); }

double sorted_mean(const std::vector<double>& sorted) {
  if (unanimous(sorted)) return sorted.front();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  return sum / static_cast<double>(sorted.size());
}

}  // namespace

double mean_score(const ScoreSet& s) { return sorted_mean(ascending(s)); }

double std_score(const ScoreSet& s, VarianceMode mode) {
  const auto sorted = ascending(s);
  if (unanimous(sorted)) return 0.0;
  const double mu = sorted_mean(sorted);
  double ss = 0.0;
  for (double v : sorted) ss += (v - mu) * (v - mu);
  const auto n = static_cast<double>(sorted.size());
  return std::sqrt(ss / (mode == VarianceMode::population ? n : n - 1.0));
}

Calibrated calibrate_and_clamp(double mean, double stddev, double lambda) {
  const double calibrated = mean - lambda * stddev;
  return {calibrated, std::max(0.0, std::min(1.0, calibrated))};
}

UascResult run_uasc(std::span<const ParseOutcome> outcomes, const CalibrationConfig& cfg) {
  cfg.validate();
  if (outcomes.size() != static_cast<std::size_t>(cfg.n_samples)) {
    throw Error(ErrorCode::InvalidConfig, "expected " + std::to_string(cfg.n_samples) + " outcomes, got " +
                                              std::to_string(outcomes.size()));
  }

  UascResult result;
  result.lambda = cfg.lambda;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    SampleDetail detail{static_cast<int>(i), o.raw_text, o.valid() ? "Success" : o.status_text(), std::nullopt};
    if (o.valid()) {
      detail.parsed_score = o.response->similarity_score;
      if (!result.representative) result.representative = *o.response;
    }
    result.per_sample.push_back(std::move(detail));
  }

  const ScoreSet scores = collect_valid_scores(outcomes);
  if (scores.empty()) throw Error(ErrorCode::NoValidSamples, "none of " + std::to_string(outcomes.size()) + " samples parsed");

  result.num_valid_samples = static_cast<int>(scores.size());
  result.mean = mean_score(scores);
  result.stddev = std_score(scores, cfg.variance_mode);
  const auto [calibrated, final_score] = calibrate_and_clamp(result.mean, result.stddev, cfg.lambda);
  result.calibrated = calibrated;
  result.final_score = final_score;
  return result;
}

json to_json(const UascResult& r) {
  json details = json::array();
  for (const auto& d : r.per_sample) {
    details.push_back({{"sample_index", d.sample_index},
                       {"raw_output", d.raw_output},
                       {"status", d.status},
                       {"parsed_score", d.parsed_score ? json(*d.parsed_score) : json(nullptr)}});
  }
  json doc = {{"similarity_score", r.final_score},
              {"calibrated_score", r.calibrated},
              {"uncertainty_metrics",
               {{"mean_score", r.mean},
                {"std_dev", r.stddev},
                {"lambda", r.lambda},
                {"num_valid_samples", r.num_valid_samples}}},
              {"sc_details", std::move(details)}};
  if (r.representative) {
    doc["justification"] = r.representative->justification;
    doc["key_matching_objects"] = r.representative->key_matching_objects;
    doc["key_mismatched_objects"] = r.representative->key_mismatched_objects;
  }
  return doc;
}

UascResult uasc_result_from_json(const json& doc) {
  try {
    UascResult r;
    r.final_score = doc.at("similarity_score").get<double>();
    r.calibrated = doc.at("calibrated_score").get<double>();
    const auto& m = doc.at("uncertainty_metrics");
    r.mean = m.at("mean_score").get<double>();
    r.stddev = m.at("std_dev").get<double>();
    r.lambda = m.at("lambda").get<double>();
    r.num_valid_samples = m.at("num_valid_samples").get<int>();
    for (const auto& d : doc.at("sc_details")) {
      SampleDetail detail{d.at("sample_index").get<int>(), d.at("raw_output").get<std::string>(),
                          d.at("status").get<std::string>(), std::nullopt};
      if (!d.at("parsed_score").is_null()) detail.parsed_score = d.at("parsed_score").get<double>();
      r.per_sample.push_back(std::move(detail));
    }
    if (doc.contains("justification")) {
      r.representative = ScoredResponse{r.final_score, doc.at("justification").get<std::string>(),
                                        doc.at("key_matching_objects").get<std::vector<std::string>>(),
                                        doc.at("key_mismatched_objects").get<std::vector<std::string>>()};
      // The representative keeps its own sampled score.
      for (const auto& d : r.per_sample) {
        if (d.parsed_score) {
          r.representative->similarity_score = *d.parsed_score;
          break;
        }
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreError, std::string("bad calibration record: ") + e.what());
  }
}

}  // namespace vpr
