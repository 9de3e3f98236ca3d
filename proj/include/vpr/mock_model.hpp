#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/gateway.hpp"

namespace vpr {

enum class NoiseProfile {
  constant,        // noise magnitude independent of the pair
  heteroscedastic  // noise peaks for mid-range distances, where verdicts are ambiguous
};

std::string_view to_string(NoiseProfile profile);
NoiseProfile parse_noise_profile(std::string_view value);

struct MockConfig {
  std::uint64_t seed = 0;
  double noise_scale = 0.05;
  double malform_rate = 0.0;
  double fence_rate = 0.0;
  double reference_distance_m = 100.0;  // distance at which the base score reaches 0
  NoiseProfile noise_profile = NoiseProfile::constant;
  double latency_base_s = 0.5;
  double latency_per_token_s = 0.02;

  void validate() const;  // InvalidConfig
};

// Base score clamp01(1 - distance / reference_distance_m) before noise.
double mock_base_score(double distance_m, const MockConfig& cfg);

// Deterministic verdict text for (seed, pair ids, sample index): a perturbed score in
// the four-key verdict schema, optionally fenced as markdown or replaced by prose.
std::string mock_complete(const PairContext& pair, int sample_index, const MockConfig& cfg);

// Word count used as the mock's completion token count.
int mock_token_count(std::string_view text);

// Serves mock_complete over the chat-completions wire format. Requests are checked
// for a well-formed body; usage and latency are synthesized deterministically.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(MockConfig cfg, int max_real_delay_ms = 0);

  HttpReply post(const HttpRequest& request) override;

  long calls() const { return calls_.load(); }
  const MockConfig& config() const { return cfg_; }

 private:
  MockConfig cfg_;
  int max_real_delay_ms_;
  std::atomic<long> calls_{0};
};

// Replies with texts[sample_index % texts.size()] regardless of the pair.
class FixtureTransport final : public Transport {
 public:
  explicit FixtureTransport(std::vector<std::string> texts, double latency_s = 1.0);

  HttpReply post(const HttpRequest& request) override;

  long calls() const { return calls_.load(); }

 private:
  std::vector<std::string> texts_;
  double latency_s_;
  std::atomic<long> calls_{0};
};

// OpenAI-style completion body carrying `content` and a completion token count.
std::string completion_body(std::string_view content, int completion_tokens);

}  // namespace vpr
