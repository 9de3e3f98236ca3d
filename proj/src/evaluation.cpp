#include "vpr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;
using nlohmann::ordered_json;

double geo_distance(const PlaceRecord& a, const PlaceRecord& b) {
  if (a.frame != b.frame) {
    throw Error(ErrorCode::FrameMismatch, a.id + " is " + std::string(to_string(a.frame)) + ", " + b.id + " is " +
                                              std::string(to_string(b.frame)));
  }
  if (a.frame == Frame::utm) return std::hypot(a.x - b.x, a.y - b.y);

  constexpr double deg = std::numbers::pi / 180.0;
  const double lat1 = a.y * deg;
  const double lat2 = b.y * deg;
  const double dlat = (b.y - a.y) * deg;
  const double dlon = (b.x - a.x) * deg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

void EvalConfig::validate() const {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) throw Error(ErrorCode::InvalidConfig, "radius must be > 0");
  if (k_values.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one K");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 1) throw Error(ErrorCode::InvalidConfig, "K values must be positive");
    if (i > 0 && k_values[i] <= k_values[i - 1]) throw Error(ErrorCode::InvalidConfig, "K values must be increasing");
  }
}

std::vector<RankedIds> ranked_ids(const std::vector<CandidateList>& lists) {
  std::vector<RankedIds> out;
  out.reserve(lists.size());
  for (const auto& list : lists) {
    RankedIds r{list.query_id, {}};
    for (const auto& c : list.items) r.candidate_ids.push_back(c.candidate_id);
    out.push_back(std::move(r));
  }
  return out;
}

int first_hit_rank(const PlaceRecord& query, std::span<const PlaceRecord* const> ranked, double radius_m) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (geo_distance(query, *ranked[i]) <= radius_m) return static_cast<int>(i + 1);
  }
  return 0;
}

RecallReport recall_at_k(std::span<const RankedIds> rankings, const PlaceIndex& places, const EvalConfig& cfg,
                         Exec exec) {
  cfg.validate();

  // Resolve every id up front so the kernel below cannot throw.
  std::vector<const PlaceRecord*> queries;
  std::vector<std::vector<const PlaceRecord*>> candidates;
  queries.reserve(rankings.size());
  candidates.reserve(rankings.size());
  for (const auto& r : rankings) {
    const PlaceRecord& q = places.at(r.query_id);
    std::vector<const PlaceRecord*> resolved;
    resolved.reserve(r.candidate_ids.size());
    for (const auto& id : r.candidate_ids) {
      const PlaceRecord& c = places.at(id);
      if (c.frame != q.frame) geo_distance(q, c);  // throws FrameMismatch
      resolved.push_back(&c);
    }
    queries.push_back(&q);
    candidates.push_back(std::move(resolved));
  }

  std::vector<int> first_hit(queries.size(), 0);
  const auto count = static_cast<std::ptrdiff_t>(queries.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto q = static_cast<std::size_t>(i);
      first_hit[q] = first_hit_rank(*queries[q], candidates[q], cfg.radius_m);
    }
  } else {
    for (std::size_t q = 0; q < queries.size(); ++q) {
      first_hit[q] = first_hit_rank(*queries[q], candidates[q], cfg.radius_m);
    }
  }

  RecallReport report;
  report.num_queries = static_cast<int>(queries.size());
  report.radius_m = cfg.radius_m;
  for (int k : cfg.k_values) {
    const auto hits = std::count_if(first_hit.begin(), first_hit.end(), [k](int h) { return h > 0 && h <= k; });
    report.recall[k] = queries.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(queries.size());
  }
  return report;
}

ComparisonReport build_report(const RecallReport& coarse, const RecallReport& reranked) {
  auto keys = [](const RecallReport& r) {
    std::vector<int> k;
    for (const auto& [key, _] : r.recall) k.push_back(key);
    return k;
  };
  if (keys(coarse) != keys(reranked)) throw Error(ErrorCode::MismatchedConfigs, "reports use different K values");
  if (coarse.num_queries != reranked.num_queries) {
    throw Error(ErrorCode::MismatchedConfigs, "reports cover different query counts");
  }
  if (coarse.radius_m != reranked.radius_m) throw Error(ErrorCode::MismatchedConfigs, "reports use different radii");

  ComparisonReport report{coarse, reranked, {}};
  for (const auto& [k, value] : reranked.recall) report.delta[k] = value - coarse.recall.at(k);
  return report;
}

ordered_json to_json(const RecallReport& report) {
  ordered_json recall = ordered_json::object();
  for (const auto& [k, value] : report.recall) recall[std::to_string(k)] = value;
  return {{"recall", std::move(recall)}, {"num_queries", report.num_queries}, {"radius_m", report.radius_m}};
}

RecallReport recall_report_from_json(const json& doc) {
  try {
    RecallReport report;
    for (const auto& [k, value] : doc.at("recall").items()) report.recall[std::stoi(k)] = value.get<double>();
    report.num_queries = doc.at("num_queries").get<int>();
    report.radius_m = doc.at("radius_m").get<double>();
    return report;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad recall report: ") + e.what());
  }
}

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string to_text(const RecallReport& report) {
  std::ostringstream out;
  out << "queries: " << report.num_queries << "  radius: " << report.radius_m << " m\n";
  for (const auto& [k, _] : report.recall) out << pad("R@" + std::to_string(k), 9);
  out << '\n';
  for (const auto& [_, value] : report.recall) out << pad(percent(value), 9);
  out << '\n';
  return out.str();
}

ordered_json to_json(const ComparisonReport& report) {
  ordered_json rows = ordered_json::object();
  for (const auto& [k, delta] : report.delta) {
    rows[std::to_string(k)] = {{"coarse", report.coarse.recall.at(k)},
                               {"reranked", report.reranked.recall.at(k)},
                               {"delta", delta}};
  }
  return {{"recall", std::move(rows)},
          {"num_queries", report.coarse.num_queries},
          {"radius_m", report.coarse.radius_m}};
}

std::string to_text(const ComparisonReport& report) {
  std::ostringstream out;
  out << "queries: " << report.coarse.num_queries << "  radius: " << report.coarse.radius_m << " m\n";
  out << pad("", 10);
  for (const auto& [k, _] : report.delta) out << pad("R@" + std::to_string(k), 9);
  out << '\n' << pad("coarse", 10);
  for (const auto& [k, _] : report.delta) out << pad(percent(report.coarse.recall.at(k)), 9);
  out << '\n' << pad("reranked", 10);
  for (const auto& [k, _] : report.delta) out << pad(percent(report.reranked.recall.at(k)), 9);
  out << '\n' << pad("delta", 10);
  for (const auto& [_, d] : report.delta) out << pad((d >= 0 ? "+" : "") + percent(d), 9);
  out << '\n';
  return out.str();
}

std::vector<RankedIds> load_ranked_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<RankedIds> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      RankedIds r{doc.at("query_id").get<std::string>(), {}};
      const auto& items = doc.contains("ranking") ? doc.at("ranking") : doc.at("candidates");
      for (const auto& item : items) r.candidate_ids.push_back(item.at("candidate_id").get<std::string>());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vpr
