#include "vpr/reference_record.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vpr/error.hpp"
#include "vpr/gateway.hpp"
#include "vpr/mock_model.hpp"
#include "vpr/pipeline.hpp"

namespace vpr::reference {

const std::vector<std::string>& raw_outputs() {
  static const std::vector<std::string> outputs{
      R"(```json
{
  "similarity_score": 0.9,
  "justification": "Both images show a busy urban street with similar storefronts, signage, and general layout, indicating they are likely taken from the same area.",
  "key_matching_objects": ["street lamps", "signage boards", "pedestrian crossing lines"],
  "key_mismatched_objects": []
}
```)",
      R"({
  "similarity_score": 0.8,
  "justification": "Both images show a busy urban street with similar storefronts, signage, and general layout, indicating they are likely taken at the same location.",
  "key_matching_objects": ["streetlights", "signage", "buildings"],
  "key_mismatched_objects": []
})",
      R"({
  "similarity_score": 0.9,
  "justification": "Both images show a busy urban street with similar storefronts, signage, and general layout, indicating they are likely taken from the same area.",
  "key_matching_objects": ["street lamps", "signage boards", "pedestrian crossing lines"],
  "key_mismatched_objects": []
})",
      R"(```json
{
  "similarity_score": 0.95,
  "justification": "Both images show the same urban street scene with recognizable shops and signage, including '3COINS' and 'Claire's', indicating they are likely taken at the same location.",
  "key_matching_objects": [
    "'3COINS' store sign",
    "'Claire's' store sign",
    "Street lamp design",
    "Pedestrian crossing lines"
  ],
  "key_mismatched_objects": []
}
```)",
      R"({
  "similarity_score": 0.85,
  "justification": "Both images show a busy urban street with similar storefronts, signage, and general layout. Key matching objects include the '3COINS' store sign, 'KEN' sign, and various shop facades with consistent branding.",
  "key_matching_objects": ["3COINS", "KEN", "Shop Facades"],
  "key_mismatched_objects": []
})",
  };
  return outputs;
}

namespace {

// 1x1 RGB PNG.
constexpr unsigned char kTinyPng[] = {0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xdf, 0xc0, 0x00, 0x00, 0x04, 0x01, 0x01, 0x80, 0xc5, 0x2a, 0x18, 0x5d, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

void expect_close(CheckResult& check, const char* what, double got, double want) {
  if (!(std::abs(got - want) <= kTolerance)) {
    check.failures.push_back(std::string(what) + ": got " + nlohmann::json(got).dump() + ", want " +
                             nlohmann::json(want).dump());
  }
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("vpr-check-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

CheckResult run_check(bool through_pipeline) {
  CheckResult check;
  std::vector<ParseOutcome> outcomes;
  for (const auto& raw : raw_outputs()) outcomes.push_back(parse_scored_response(raw));

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].valid()) {
      check.failures.push_back("sample " + std::to_string(i) + " did not parse: " + outcomes[i].status_text());
    } else if (outcomes[i].response->similarity_score != kParsedScores[i]) {
      check.failures.push_back("sample " + std::to_string(i) + " parsed to the wrong score");
    }
  }
  if (!check.failures.empty()) return check;

  const CalibrationConfig cfg{kLambda, VarianceMode::population, static_cast<int>(outcomes.size())};
  check.result = run_uasc(outcomes, cfg);
  expect_close(check, "mean_score", check.result.mean, kMean);
  expect_close(check, "std_dev", check.result.stddev, kStdDev);
  expect_close(check, "similarity_score", check.result.final_score, kFinal);
  if (check.result.num_valid_samples != kNumValid) check.failures.push_back("num_valid_samples mismatch");

  if (through_pipeline) {
    TempDir dir;
    const auto image = dir.path() / "pair.png";
    {
      std::ofstream out(image, std::ios::binary);
      out.write(reinterpret_cast<const char*>(kTinyPng), sizeof kTinyPng);
    }
    const PlaceRecord query{"query", image, Frame::utm, 0.0, 0.0};
    const PlaceRecord candidate{"candidate", image, Frame::utm, 0.0, 0.0};

    auto transport = std::make_shared<FixtureTransport>(raw_outputs());
    ModelConfig model{"http://fixture", "fixture", 0.7, Seconds(5.0), 0, 1};
    Gateway gateway(transport, model);
    PipelineConfig pipeline;
    pipeline.mode.calibration = cfg;
    pipeline.model_tag = "fixture";
    const PairScorer scorer(gateway, default_template(), pipeline);
    const PairScore score = scorer.score_pair(query, candidate, 1);
    expect_close(check, "pipeline similarity_score", score.final_score, kFinal);
    if (transport->calls() != cfg.n_samples) check.failures.push_back("pipeline issued an unexpected request count");
    if (score.fallback_used) check.failures.push_back("pipeline fell back");
  }

  check.passed = check.failures.empty();
  return check;
}

}  // namespace vpr::reference
