#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpr/descriptors.hpp"
#include "vpr/places.hpp"

namespace vpr {

inline constexpr double kEarthRadiusM = 6'371'000.0;

// Planar distance for utm, haversine on a sphere for wgs84. FrameMismatch when
// the two records use different frames.
double geo_distance(const PlaceRecord& a, const PlaceRecord& b);

struct EvalConfig {
  double radius_m = 25.0;
  std::vector<int> k_values{1, 5, 10};

  void validate() const;  // InvalidConfig
};

// The ordered candidate ids retrieved for one query.
struct RankedIds {
  std::string query_id;
  std::vector<std::string> candidate_ids;
};

std::vector<RankedIds> ranked_ids(const std::vector<CandidateList>& lists);

struct RecallReport {
  std::map<int, double> recall;
  int num_queries = 0;
  double radius_m = 0.0;

  bool operator==(const RecallReport&) const = default;
};

// 1-based rank of the first candidate within radius_m of the query, 0 when none is.
// Inputs must already be resolved; this is the per-query kernel.
int first_hit_rank(const PlaceRecord& query, std::span<const PlaceRecord* const> ranked, double radius_m);

// Fraction of queries with a correct candidate among the first K, for each K.
RecallReport recall_at_k(std::span<const RankedIds> rankings, const PlaceIndex& places, const EvalConfig& cfg,
                         Exec exec = Exec::parallel);

struct ComparisonReport {
  RecallReport coarse;
  RecallReport reranked;
  std::map<int, double> delta;  // reranked - coarse
};

ComparisonReport build_report(const RecallReport& coarse, const RecallReport& reranked);  // MismatchedConfigs

nlohmann::ordered_json to_json(const RecallReport& report);
RecallReport recall_report_from_json(const nlohmann::json& doc);
std::string to_text(const RecallReport& report);

nlohmann::ordered_json to_json(const ComparisonReport& report);
std::string to_text(const ComparisonReport& report);

// Reads either a ranking file ({"query_id", "ranking": [...]}) or a candidate file
// ({"query_id", "candidates": [...]}); one query per line.
std::vector<RankedIds> load_ranked_ids(const std::filesystem::path& path);

}  // namespace vpr
