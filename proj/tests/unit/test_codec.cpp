#include <fstream>
#include <random>

#include "unit_helpers.hpp"
#include "vpr/codec.hpp"
#include "vpr/reference_record.hpp"

using namespace vpr;

namespace {

nlohmann::json reference_fixture() {
  std::ifstream in(test_data("reference_record.json"));
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(ExtractJson, NamedExamples) {
  EXPECT_EQ(extract_json_block("```json\n{\"a\":1}\n```"), "{\"a\":1}");
  EXPECT_EQ(extract_json_block("{\"a\":1}"), "{\"a\":1}");
  EXPECT_EQ(extract_json_block("prefix {\"a\":{\"b\":2}} suffix"), "{\"a\":{\"b\":2}}");
}

TEST(ExtractJson, EdgeCases) {
  EXPECT_EQ(extract_json_block("no json"), std::nullopt);
  EXPECT_EQ(extract_json_block("{\"a\":\"}\"} tail"), "{\"a\":\"}\"}");
  EXPECT_EQ(extract_json_block("{\"a\":\"\\\"}\"}"), "{\"a\":\"\\\"}\"}");
  EXPECT_EQ(extract_json_block("```\n{\"x\":2}\n```"), "{\"x\":2}");
  EXPECT_EQ(extract_json_block("```json\n{\"x\":3}"), "{\"x\":3}");
  EXPECT_EQ(extract_json_block("{ unterminated"), std::nullopt);
}

TEST(ParseScored, StoredRawOutputsMatchFixtureFile) {
  const auto doc = reference_fixture();
  const auto& raws = reference::raw_outputs();
  ASSERT_EQ(doc["sc_details"].size(), raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) EXPECT_EQ(doc["sc_details"][i]["raw_output"], raws[i]);
}

TEST(ParseScored, StoredRawOutputsParseToRecordedScores) {
  const auto doc = reference_fixture();
  const auto& raws = reference::raw_outputs();
  for (std::size_t i = 0; i < raws.size(); ++i) {
    const auto outcome = parse_scored_response(raws[i]);
    ASSERT_TRUE(outcome.valid()) << i << ": " << outcome.status_text();
    EXPECT_EQ(outcome.response->similarity_score, doc["sc_details"][i]["parsed_score"].get<double>());
    EXPECT_EQ(outcome.response->similarity_score, reference::kParsedScores[i]);
    EXPECT_FALSE(outcome.response->justification.empty());
    EXPECT_EQ(outcome.raw_text, raws[i]);
  }
  EXPECT_EQ(parse_scored_response(raws[0]).response->similarity_score, 0.9);
  EXPECT_EQ(parse_scored_response(raws[3]).response->similarity_score, 0.95);
}

TEST(ParseScored, FailureKinds) {
  auto failure = [](std::string_view raw) {
    const auto o = parse_scored_response(raw);
    EXPECT_FALSE(o.valid());
    return o.failure;
  };
  EXPECT_EQ(failure("The images match well."), ParseFailure::NoJsonFound);
  EXPECT_EQ(failure("{\"similarity_score\": }"), ParseFailure::MalformedJson);
  EXPECT_EQ(failure("```json\n[1,2]\n```"), ParseFailure::MalformedJson);
  EXPECT_EQ(failure("{\"score\": 0.5}"), ParseFailure::MissingScore);
  EXPECT_EQ(failure("{\"Similarity_Score\": 0.5}"), ParseFailure::MissingScore);
  EXPECT_EQ(failure("{\"similarity_score\": \"0.5\"}"), ParseFailure::NonNumericScore);
  EXPECT_EQ(failure("{\"similarity_score\": -0.01}"), ParseFailure::OutOfRangeScore);

  const auto high = parse_scored_response(R"({"similarity_score": 1.7, "justification": "x"})");
  EXPECT_EQ(high.failure, ParseFailure::OutOfRangeScore);
  EXPECT_EQ(high.detail, "1.7");
  EXPECT_EQ(high.status_text(), "OutOfRangeScore(1.7)");
}

TEST(ParseScored, OptionalFieldsDefaultAndBoundsAccepted) {
  const auto o = parse_scored_response("{\"similarity_score\": 1, \"extra\": true}");
  ASSERT_TRUE(o.valid());
  EXPECT_EQ(o.response->similarity_score, 1.0);
  EXPECT_TRUE(o.response->justification.empty());
  EXPECT_TRUE(o.response->key_matching_objects.empty());
  EXPECT_TRUE(o.response->key_mismatched_objects.empty());
  EXPECT_TRUE(parse_scored_response("{\"similarity_score\": 0}").valid());
}

TEST(ParseScored, SerializationIsIdempotent) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    ScoredResponse r{u(rng), "why \"quoted\" {braces} " + std::to_string(i), {"tower", "sign"}, {}};
    if (i % 3 == 0) r.key_mismatched_objects = {"car"};
    const auto text = to_json(r).dump(i % 2 ? 2 : -1);
    const auto fenced = "```json\n" + text + "\n```";
    for (const auto& raw : {text, fenced}) {
      const auto o = parse_scored_response(raw);
      ASSERT_TRUE(o.valid()) << raw;
      EXPECT_EQ(*o.response, r);
    }
  }
}

TEST(ParseScored, OutcomeRecordRoundTrips) {
  for (const auto* raw : {R"({"similarity_score": 0.4, "justification": "j", "key_matching_objects": ["a"]})",
                          "prose only", R"({"similarity_score": 3})"}) {
    const auto o = parse_scored_response(raw);
    EXPECT_EQ(parse_outcome_from_json(to_json(o)), o);
  }
}

TEST(ParseScored, FuzzNeverThrows) {
  std::mt19937_64 rng(77);
  const std::string alphabet = "{}[]\":,`json similarity_score0123456789.-eE\\\n tru fals nul";
  for (int i = 0; i < 10000; ++i) {
    std::string s(rng() % 120, ' ');
    for (auto& c : s) c = rng() % 5 == 0 ? static_cast<char>(rng()) : alphabet[rng() % alphabet.size()];
    EXPECT_NO_THROW({
      const auto o = parse_scored_response(s);
      if (o.valid()) {
        EXPECT_GE(o.response->similarity_score, 0.0);
        EXPECT_LE(o.response->similarity_score, 1.0);
      }
    });
  }
}
