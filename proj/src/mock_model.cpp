#include "vpr/mock_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <json.hpp>

#include "vpr/encoding.hpp"
#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(NoiseProfile profile) {
  return profile == NoiseProfile::constant ? "constant" : "heteroscedastic";
}

NoiseProfile parse_noise_profile(std::string_view value) {
  if (value == "constant") return NoiseProfile::constant;
  if (value == "heteroscedastic") return NoiseProfile::heteroscedastic;
  throw Error(ErrorCode::InvalidConfig, "unknown noise profile '" + std::string(value) + "'");
}

void MockConfig::validate() const {
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(malform_rate) || !rate_ok(fence_rate)) {
    throw Error(ErrorCode::InvalidConfig, "mock malform/fence rates must lie in [0, 1]");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw Error(ErrorCode::InvalidConfig, "mock noise must be >= 0");
  if (!(reference_distance_m > 0.0)) throw Error(ErrorCode::InvalidConfig, "mock reference distance must be > 0");
  if (!(latency_base_s >= 0.0) || !(latency_per_token_s >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "mock latencies must be >= 0");
  }
}

double mock_base_score(double distance_m, const MockConfig& cfg) {
  return std::clamp(1.0 - distance_m / cfg.reference_distance_m, 0.0, 1.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 output is fixed by the standard; the distributions below are written
// out by hand because std:: distributions differ between library implementations.
class Draws {
 public:
  Draws(const PairContext& pair, int sample_index, std::uint64_t seed) {
    std::uint64_t h = fnv1a64(pair.query_id);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(pair.candidate_id, h);
    rng_.seed(splitmix64(h ^ splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(sample_index)))));
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
};

struct Verdict {
  const char* justification;
  std::vector<std::string> matching;
  std::vector<std::string> mismatched;
};

Verdict verdict_for(double score) {
  if (score >= 0.8) {
    return {"Both images show the same street section with matching facades, signage and street furniture.",
            {"building facade", "storefront signage", "street lamps"},
            {}};
  }
  if (score >= 0.5) {
    return {"Several significant landmarks match, although parts of the scene differ.",
            {"building facade", "road layout"},
            {"storefront signage"}};
  }
  if (score >= 0.2) {
    return {"The images share only generic urban features such as road markings.",
            {"road markings"},
            {"building facade", "storefront signage"}};
  }
  return {"No significant permanent landmarks match; these are different locations.",
          {},
          {"building facade", "storefront signage", "skyline"}};
}

}  // namespace

std::string mock_complete(const PairContext& pair, int sample_index, const MockConfig& cfg) {
  Draws draws(pair, sample_index, cfg.seed);
  const double base = mock_base_score(pair.distance_m, cfg);
  double magnitude = cfg.noise_scale;
  if (cfg.noise_profile == NoiseProfile::heteroscedastic) magnitude *= 0.2 + 3.2 * base * (1.0 - base);
  const double noisy = std::clamp(base + magnitude * draws.normal(), 0.0, 1.0);
  const double score = std::round(noisy * 100.0) / 100.0;

  const bool malformed = draws.uniform() < cfg.malform_rate;
  const bool fenced = draws.uniform() < cfg.fence_rate;

  std::string body;
  if (malformed) {
    body = "I compared the permanent structures in both images, but I cannot commit to a reliable similarity score "
           "for this pair.";
  } else {
    const Verdict v = verdict_for(score);
    ordered_json doc;
    doc["similarity_score"] = score;
    doc["justification"] = v.justification;
    doc["key_matching_objects"] = v.matching;
    doc["key_mismatched_objects"] = v.mismatched;
    body = doc.dump(2);
  }
  return fenced ? "```json\n" + body + "\n```" : body;
}

int mock_token_count(std::string_view text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::string completion_body(std::string_view content, int completion_tokens) {
  json doc = {{"object", "chat.completion"},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", "stop"}}})},
              {"usage", {{"completion_tokens", completion_tokens}}}};
  return doc.dump();
}

namespace {

// Minimal server-side check that a request follows the chat-completions layout.
bool well_formed_request(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  return doc.is_object() && doc.contains("model") && doc.contains("temperature") && doc["temperature"].is_number() &&
         doc.contains("messages") && doc["messages"].is_array() && !doc["messages"].empty();
}

}  // namespace

MockTransport::MockTransport(MockConfig cfg, int max_real_delay_ms)
    : cfg_(std::move(cfg)), max_real_delay_ms_(max_real_delay_ms) {
  cfg_.validate();
}

HttpReply MockTransport::post(const HttpRequest& request) {
  ++calls_;
  if (max_real_delay_ms_ > 0) {
    thread_local std::mt19937 rng{std::random_device{}()};
    std::this_thread::sleep_for(
        std::chrono::milliseconds(std::uniform_int_distribution<int>(0, max_real_delay_ms_)(rng)));
  }
  if (!well_formed_request(request.body)) return {400, R"({"error":"malformed request"})", {}, std::nullopt};

  const std::string text = mock_complete(request.pair, request.sample_index, cfg_);
  const int tokens = mock_token_count(text);
  return {200, completion_body(text, tokens), {}, cfg_.latency_base_s + cfg_.latency_per_token_s * tokens};
}

FixtureTransport::FixtureTransport(std::vector<std::string> texts, double latency_s)
    : texts_(std::move(texts)), latency_s_(latency_s) {
  if (texts_.empty()) throw Error(ErrorCode::InvalidConfig, "fixture transport needs at least one text");
}

HttpReply FixtureTransport::post(const HttpRequest& request) {
  ++calls_;
  const auto& text = texts_[static_cast<std::size_t>(request.sample_index) % texts_.size()];
  return {200, completion_body(text, mock_token_count(text)), {}, latency_s_};
}

}  // namespace vpr
