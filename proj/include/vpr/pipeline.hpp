#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpr/codec.hpp"
#include "vpr/descriptors.hpp"
#include "vpr/evaluation.hpp"
#include "vpr/gateway.hpp"
#include "vpr/places.hpp"
#include "vpr/prompting.hpp"
#include "vpr/uasc.hpp"

namespace vpr {

enum class ScoringKind { single_pass, uasc };

std::string_view to_string(ScoringKind kind);
ScoringKind parse_scoring_kind(std::string_view value);  // "single" | "uasc"

struct ScoringMode {
  ScoringKind kind = ScoringKind::uasc;
  CalibrationConfig calibration;
  double single_pass_temperature = 0.0;
  double sample_temperature = 0.7;

  // Stable description used in cache keys, e.g. "uasc:n=5:lambda=0.5:var=population:t=0.7".
  std::string tag() const;
  void validate() const;
};

struct PairScore {
  std::string query_id;
  std::string candidate_id;
  double final_score = 0.0;
  int coarse_rank = 0;
  bool fallback_used = false;
  std::optional<UascResult> uasc;     // uasc mode, when at least one sample parsed
  std::vector<SampleDetail> samples;  // every request's raw output and status
  double latency_s = 0.0;             // summed over the pair's requests
  int output_tokens = 0;
  int requests = 0;

  bool operator==(const PairScore&) const = default;
};

nlohmann::json to_json(const PairScore& score);
PairScore pair_score_from_json(const nlohmann::json& doc);

// Sorted by final score descending, ties by ascending coarse rank.
struct Ranking {
  std::string query_id;
  std::vector<PairScore> items;
};

// "Sample" means one query-candidate pair.
struct Telemetry {
  double avg_time_s_per_sample = 0.0;
  double avg_output_tokens_per_sample = 0.0;
  int total_pairs = 0;
  long total_requests = 0;

  bool operator==(const Telemetry&) const = default;
};

Telemetry aggregate_telemetry(std::span<const PairScore> pairs);  // EmptyInput
nlohmann::ordered_json to_json(const Telemetry& telemetry);

// One file per scored pair, keyed by everything that determines the verdict.
class PairCache {
 public:
  explicit PairCache(std::filesystem::path dir);

  std::optional<PairScore> get(const std::string& key) const;
  void put(const std::string& key, const PairScore& score) const;  // atomic replace

  long hits() const { return hits_.load(); }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::atomic<long> hits_{0};
};

struct PipelineConfig {
  ScoringMode mode;
  ImageOptions images;
  std::string model_tag;     // identifies the model (and mock settings) in cache keys
  int pair_concurrency = 4;  // pairs scored at once; the gateway still caps requests
};

// Scores query-candidate pairs: prompt -> gateway -> codec -> (uasc).
class PairScorer {
 public:
  PairScorer(Gateway& gateway, PromptTemplate tmpl, PipelineConfig cfg, PairCache* cache = nullptr);

  // Unparseable or failed requests fall back to a score of 0 instead of throwing.
  // Missing images and AuthError still propagate.
  PairScore score_pair(const PlaceRecord& query, const PlaceRecord& candidate, int coarse_rank) const;

  std::string cache_key(const std::string& query_id, const std::string& candidate_id) const;
  const PipelineConfig& config() const { return cfg_; }

 private:
  PairScore score_uncached(const PlaceRecord& query, const PlaceRecord& candidate, int coarse_rank) const;

  Gateway& gateway_;
  PromptTemplate template_;
  std::string prompt_hash_;
  PipelineConfig cfg_;
  PairCache* cache_;
};

// Sorts pair scores into ranking order.
Ranking make_ranking(std::string query_id, std::vector<PairScore> scores);

Ranking rerank_query(const PlaceRecord& query, const CandidateList& coarse, const PlaceIndex& places,
                     const PairScorer& scorer);

struct DatasetResult {
  std::vector<Ranking> rankings;
  Telemetry telemetry;
  bool complete = true;  // false when stopped early; finished queries are still written
};

// Reranks every list in order, appending one ranking line per finished query to
// `output` (truncated first). Already cached pairs are not requested again, so an
// interrupted run can be resumed with the same cache.
DatasetResult rerank_dataset(const std::vector<CandidateList>& coarse, const PlaceIndex& places,
                             const PairScorer& scorer, const std::filesystem::path& output,
                             std::stop_token stop = {});

nlohmann::ordered_json ranking_line(const Ranking& ranking);
std::vector<Ranking> load_rankings(const std::filesystem::path& path);
std::vector<RankedIds> ranked_ids(const std::vector<Ranking>& rankings);

}  // namespace vpr
