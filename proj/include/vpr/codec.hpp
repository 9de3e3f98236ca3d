#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vpr {

// One model verdict in the mandated four-key schema.
struct ScoredResponse {
  double similarity_score = 0.0;
  std::string justification;
  std::vector<std::string> key_matching_objects;
  std::vector<std::string> key_mismatched_objects;

  bool operator==(const ScoredResponse&) const = default;
};

enum class ParseFailure { NoJsonFound, MalformedJson, MissingScore, NonNumericScore, OutOfRangeScore };

std::string_view to_string(ParseFailure failure);

struct ParseOutcome {
  std::optional<ScoredResponse> response;  // set iff valid
  ParseFailure failure = ParseFailure::NoJsonFound;
  std::string detail;  // e.g. the offending value for OutOfRangeScore
  std::string raw_text;

  bool valid() const { return response.has_value(); }
  // "valid" or the failure name, with detail appended when present.
  std::string status_text() const;

  bool operator==(const ParseOutcome&) const = default;
};

// First fenced code block if the text has one, else the first balanced {...} span.
std::optional<std::string> extract_json_block(std::string_view raw);

// Never throws; every failure is reported through the outcome.
ParseOutcome parse_scored_response(std::string_view raw);

nlohmann::json to_json(const ScoredResponse& response);
nlohmann::json to_json(const ParseOutcome& outcome);
ParseOutcome parse_outcome_from_json(const nlohmann::json& doc);

}  // namespace vpr
