#include "vpr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "vpr/encoding.hpp"
#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ScoringKind kind) { return kind == ScoringKind::single_pass ? "single" : "uasc"; }

ScoringKind parse_scoring_kind(std::string_view value) {
  if (value == "single") return ScoringKind::single_pass;
  if (value == "uasc") return ScoringKind::uasc;
  throw Error(ErrorCode::InvalidConfig, "unknown scoring mode '" + std::string(value) + "'");
}

namespace {

// Shortest round-trip text for a double, so keys do not depend on stream state.
std::string number_text(double v) { return json(v).dump(); }

}  // namespace

std::string ScoringMode::tag() const {
  if (kind == ScoringKind::single_pass) return "single:t=" + number_text(single_pass_temperature);
  return "uasc:n=" + std::to_string(calibration.n_samples) + ":lambda=" + number_text(calibration.lambda) +
         ":var=" + std::string(to_string(calibration.variance_mode)) + ":t=" + number_text(sample_temperature);
}

void ScoringMode::validate() const {
  calibration.validate();
  for (double t : {single_pass_temperature, sample_temperature}) {
    if (!std::isfinite(t) || t < 0.0) throw Error(ErrorCode::InvalidConfig, "temperature must be finite and >= 0");
  }
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const PairScore& s) {
  json samples = json::array();
  for (const auto& d : s.samples) {
    samples.push_back({{"sample_index", d.sample_index},
                       {"raw_output", d.raw_output},
                       {"status", d.status},
                       {"parsed_score", d.parsed_score ? json(*d.parsed_score) : json(nullptr)}});
  }
  json doc = {{"query_id", s.query_id},
              {"candidate_id", s.candidate_id},
              {"final_score", s.final_score},
              {"coarse_rank", s.coarse_rank},
              {"fallback_used", s.fallback_used},
              {"samples", std::move(samples)},
              {"latency_s", s.latency_s},
              {"output_tokens", s.output_tokens},
              {"requests", s.requests}};
  if (s.uasc) doc["uasc"] = to_json(*s.uasc);
  return doc;
}

PairScore pair_score_from_json(const json& doc) {
  try {
    PairScore s;
    s.query_id = doc.at("query_id").get<std::string>();
    s.candidate_id = doc.at("candidate_id").get<std::string>();
    s.final_score = doc.at("final_score").get<double>();
    s.coarse_rank = doc.at("coarse_rank").get<int>();
    s.fallback_used = doc.at("fallback_used").get<bool>();
    for (const auto& d : doc.at("samples")) {
      SampleDetail detail{d.at("sample_index").get<int>(), d.at("raw_output").get<std::string>(),
                          d.at("status").get<std::string>(), std::nullopt};
      if (!d.at("parsed_score").is_null()) detail.parsed_score = d.at("parsed_score").get<double>();
      s.samples.push_back(std::move(detail));
    }
    s.latency_s = doc.at("latency_s").get<double>();
    s.output_tokens = doc.at("output_tokens").get<int>();
    s.requests = doc.at("requests").get<int>();
    if (doc.contains("uasc")) s.uasc = uasc_result_from_json(doc.at("uasc"));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreError, std::string("bad pair record: ") + e.what());
  }
}

Telemetry aggregate_telemetry(std::span<const PairScore> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no pairs to aggregate");
  double time = 0.0;
  double tokens = 0.0;
  Telemetry t;
  for (const auto& p : pairs) {
    time += p.latency_s;
    tokens += p.output_tokens;
    t.total_requests += p.requests;
  }
  t.total_pairs = static_cast<int>(pairs.size());
  t.avg_time_s_per_sample = time / static_cast<double>(pairs.size());
  t.avg_output_tokens_per_sample = tokens / static_cast<double>(pairs.size());
  return t;
}

ordered_json to_json(const Telemetry& t) {
  return {{"avg_time_s_per_sample", t.avg_time_s_per_sample},
          {"avg_output_tokens_per_sample", t.avg_output_tokens_per_sample},
          {"total_pairs", t.total_pairs},
          {"total_requests", t.total_requests}};
}

// ---------------------------------------------------------------------------
// Cache

PairCache::PairCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw Error(ErrorCode::StoreError, "cannot create cache directory " + dir_.string());
  }
}

std::filesystem::path PairCache::path_for(const std::string& key) const {
  return dir_ / (to_hex(fnv1a64(key)) + to_hex(fnv1a64(key, 0x84222325cbf29ce4ULL)) + ".json");
}

std::optional<PairScore> PairCache::get(const std::string& key) const {
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  json doc = json::parse(in, nullptr, false);
  // A colliding or half-written entry is a miss; the rescored pair overwrites it.
  if (doc.is_discarded() || !doc.is_object() || doc.value("key", "") != key || !doc.contains("pair")) {
    return std::nullopt;
  }
  PairScore score = pair_score_from_json(doc["pair"]);
  ++hits_;
  return score;
}

void PairCache::put(const std::string& key, const PairScore& score) const {
  const auto target = path_for(key);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const auto temp = std::filesystem::path(target.string() + suffix.str());
  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::StoreError, "cannot write " + temp.string());
    out << json{{"key", key}, {"pair", to_json(score)}}.dump();
    if (!out.flush()) throw Error(ErrorCode::StoreError, "cannot write " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) throw Error(ErrorCode::StoreError, "cannot publish " + target.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Pair scoring

PairScorer::PairScorer(Gateway& gateway, PromptTemplate tmpl, PipelineConfig cfg, PairCache* cache)
    : gateway_(gateway),
      template_(std::move(tmpl)),
      prompt_hash_(prompt_fingerprint(template_)),
      cfg_(std::move(cfg)),
      cache_(cache) {
  validate(template_);
  cfg_.mode.validate();
  if (cfg_.pair_concurrency < 1) throw Error(ErrorCode::InvalidConfig, "pair concurrency must be >= 1");
}

std::string PairScorer::cache_key(const std::string& query_id, const std::string& candidate_id) const {
  // Ids may contain any byte except the unit separator used here.
  const char sep = '\x1f';
  return query_id + sep + candidate_id + sep + cfg_.mode.tag() + sep + cfg_.model_tag + sep + prompt_hash_ + sep +
         "max_side=" + std::to_string(cfg_.images.max_side);
}

namespace {

ParseOutcome outcome_for(const RawResponse& r) {
  if (r.ok) return parse_scored_response(r.text);
  return {std::nullopt, ParseFailure::NoJsonFound, "request failed: " + r.failure_reason, r.text};
}

SampleDetail detail_for(int index, const ParseOutcome& o) {
  return {index, o.raw_text, o.valid() ? "Success" : o.status_text(),
          o.valid() ? std::optional<double>(o.response->similarity_score) : std::nullopt};
}

PairContext context_for(const PlaceRecord& query, const PlaceRecord& candidate) {
  const double distance = query.frame == candidate.frame ? geo_distance(query, candidate)
                                                         : std::numeric_limits<double>::infinity();
  return {query.id, candidate.id, distance};
}

}  // namespace

PairScore PairScorer::score_uncached(const PlaceRecord& query, const PlaceRecord& candidate, int coarse_rank) const {
  const MessageSequence messages = build_messages(query, candidate, template_, cfg_.images);
  PairScore score{query.id, candidate.id, 0.0, coarse_rank, false, std::nullopt, {}, 0.0, 0, 0};
  CallOptions options{std::nullopt, context_for(query, candidate)};

  if (cfg_.mode.kind == ScoringKind::single_pass) {
    options.temperature = cfg_.mode.single_pass_temperature;
    RawResponse response;
    try {
      response = gateway_.complete(messages, options, 0);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AuthError) throw;
      response.ok = false;
      response.failure_reason = e.what();
    }
    const ParseOutcome outcome = outcome_for(response);
    score.samples.push_back(detail_for(0, outcome));
    score.requests = 1;
    score.latency_s = response.latency_s;
    score.output_tokens = response.output_tokens;
    if (outcome.valid()) {
      score.final_score = outcome.response->similarity_score;
    } else {
      score.fallback_used = true;
    }
    return score;
  }

  options.temperature = cfg_.mode.sample_temperature;
  const int n = cfg_.mode.calibration.n_samples;
  const std::vector<RawResponse> responses = gateway_.sample_n(messages, n, options);
  std::vector<ParseOutcome> outcomes;
  outcomes.reserve(responses.size());
  for (const auto& r : responses) {
    outcomes.push_back(outcome_for(r));
    score.samples.push_back(detail_for(r.sample_index, outcomes.back()));
    score.latency_s += r.latency_s;
    score.output_tokens += r.output_tokens;
  }
  score.requests = n;
  try {
    score.uasc = run_uasc(outcomes, cfg_.mode.calibration);
    score.final_score = score.uasc->final_score;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoValidSamples) throw;
    score.fallback_used = true;
  }
  return score;
}

PairScore PairScorer::score_pair(const PlaceRecord& query, const PlaceRecord& candidate, int coarse_rank) const {
  std::string key;
  if (cache_ != nullptr) {
    key = cache_key(query.id, candidate.id);
    if (auto hit = cache_->get(key)) {
      hit->coarse_rank = coarse_rank;
      return std::move(*hit);
    }
  }
  PairScore score = score_uncached(query, candidate, coarse_rank);
  if (cache_ != nullptr) cache_->put(key, score);
  return score;
}

// ---------------------------------------------------------------------------
// Ranking

Ranking make_ranking(std::string query_id, std::vector<PairScore> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const PairScore& a, const PairScore& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    return a.coarse_rank < b.coarse_rank;
  });
  return {std::move(query_id), std::move(scores)};
}

namespace {

// Scores every candidate of one list with a small worker pool. Returns nullopt
// when a stop was requested before all pairs were started.
std::optional<std::vector<PairScore>> score_candidates(const PlaceRecord& query, const CandidateList& coarse,
                                                       const PlaceIndex& places, const PairScorer& scorer,
                                                       std::stop_token stop) {
  const std::size_t count = coarse.items.size();
  std::vector<std::optional<PairScore>> results(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (;;) {
      if (stop.stop_requested()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t i = next++;
      if (i >= count) return;
      try {
        const Candidate& c = coarse.items[i];
        results[i] = scorer.score_pair(query, places.at(c.candidate_id), c.coarse_rank);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(scorer.config().pair_concurrency));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<PairScore> scores;
  scores.reserve(count);
  for (auto& r : results) {
    if (!r) return std::nullopt;
    scores.push_back(std::move(*r));
  }
  return scores;
}

}  // namespace

Ranking rerank_query(const PlaceRecord& query, const CandidateList& coarse, const PlaceIndex& places,
                     const PairScorer& scorer) {
  if (coarse.items.empty()) throw Error(ErrorCode::EmptyCandidateList, query.id);
  auto scores = score_candidates(query, coarse, places, scorer, {});
  return make_ranking(query.id, std::move(*scores));
}

ordered_json ranking_line(const Ranking& ranking) {
  ordered_json items = ordered_json::array();
  double time = 0.0;
  long tokens = 0;
  for (const auto& p : ranking.items) {
    ordered_json item = {{"candidate_id", p.candidate_id},
                         {"score", p.final_score},
                         {"coarse_rank", p.coarse_rank},
                         {"fallback_used", p.fallback_used}};
    if (p.uasc) {
      item["uncertainty_metrics"] = {{"mean_score", p.uasc->mean},
                                     {"std_dev", p.uasc->stddev},
                                     {"lambda", p.uasc->lambda},
                                     {"num_valid_samples", p.uasc->num_valid_samples}};
    }
    items.push_back(std::move(item));
    time += p.latency_s;
    tokens += p.output_tokens;
  }
  return {{"query_id", ranking.query_id},
          {"ranking", std::move(items)},
          {"telemetry", {{"time_s", time}, {"output_tokens", tokens}}}};
}

DatasetResult rerank_dataset(const std::vector<CandidateList>& coarse, const PlaceIndex& places,
                             const PairScorer& scorer, const std::filesystem::path& output, std::stop_token stop) {
  for (const auto& list : coarse) {
    if (places.find(list.query_id) == nullptr) {
      throw Error(ErrorCode::InvalidConfig, "query '" + list.query_id + "' is not in the manifest");
    }
    if (list.items.empty()) throw Error(ErrorCode::EmptyCandidateList, list.query_id);
    for (const auto& c : list.items) {
      if (places.find(c.candidate_id) == nullptr) {
        throw Error(ErrorCode::InvalidConfig, "candidate '" + c.candidate_id + "' is not in the manifest");
      }
    }
  }

  std::ofstream out(output, std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreError, "cannot write " + output.string());

  DatasetResult result;
  std::vector<PairScore> all_pairs;
  for (const auto& list : coarse) {
    const PlaceRecord& query = places.at(list.query_id);
    auto scores = score_candidates(query, list, places, scorer, stop);
    if (!scores) {
      result.complete = false;
      break;
    }
    all_pairs.insert(all_pairs.end(), scores->begin(), scores->end());
    Ranking ranking = make_ranking(list.query_id, std::move(*scores));
    out << ranking_line(ranking).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::StoreError, "cannot write " + output.string());
    result.rankings.push_back(std::move(ranking));
  }
  if (!all_pairs.empty()) result.telemetry = aggregate_telemetry(all_pairs);
  return result;
}

std::vector<Ranking> load_rankings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<Ranking> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      Ranking ranking{doc.at("query_id").get<std::string>(), {}};
      for (const auto& item : doc.at("ranking")) {
        PairScore p;
        p.query_id = ranking.query_id;
        p.candidate_id = item.at("candidate_id").get<std::string>();
        p.final_score = item.at("score").get<double>();
        p.coarse_rank = item.at("coarse_rank").get<int>();
        p.fallback_used = item.at("fallback_used").get<bool>();
        ranking.items.push_back(std::move(p));
      }
      out.push_back(std::move(ranking));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RankedIds> ranked_ids(const std::vector<Ranking>& rankings) {
  std::vector<RankedIds> out;
  out.reserve(rankings.size());
  for (const auto& r : rankings) {
    RankedIds ids{r.query_id, {}};
    for (const auto& p : r.items) ids.candidate_ids.push_back(p.candidate_id);
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace vpr
