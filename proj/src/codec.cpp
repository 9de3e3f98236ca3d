#include "vpr/codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;

std::string_view to_string(ParseFailure failure) {
  switch (failure) {
    case ParseFailure::NoJsonFound: return "NoJsonFound";
    case ParseFailure::MalformedJson: return "MalformedJson";
    case ParseFailure::MissingScore: return "MissingScore";
    case ParseFailure::NonNumericScore: return "NonNumericScore";
    case ParseFailure::OutOfRangeScore: return "OutOfRangeScore";
  }
  return "Unknown";
}

std::string ParseOutcome::status_text() const {
  if (valid()) return "valid";
  std::string s(to_string(failure));
  if (!detail.empty()) s += "(" + detail + ")";
  return s;
}

namespace {

constexpr std::string_view kFence = "```";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<std::string_view> balanced_object(std::string_view text) {
  const auto start = text.find('{');
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

// Content of the first ``` fence, skipping an info string such as "json".
std::optional<std::string_view> fenced_block(std::string_view text) {
  const auto open = text.find(kFence);
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t body = open + kFence.size();
  const auto eol = text.find('\n', body);
  if (eol != std::string_view::npos) {
    const auto info = text.substr(body, eol - body);
    const bool is_info = std::all_of(info.begin(), info.end(), [](unsigned char c) {
      return std::isalnum(c) || c == '_' || c == '-' || c == '+' || c == ' ' || c == '\t' || c == '\r';
    });
    if (is_info) body = eol + 1;
  }
  const auto close = text.find(kFence, body);
  if (close == std::string_view::npos) return std::nullopt;
  return text.substr(body, close - body);
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  std::vector<std::string> out;
  auto it = doc.find(key);
  if (it == doc.end()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
  } else if (it->is_array()) {
    for (const auto& item : *it) out.push_back(item.is_string() ? item.get<std::string>() : item.dump());
  }
  return out;
}

ParseOutcome invalid(std::string_view raw, ParseFailure failure, std::string detail = {}) {
  return {std::nullopt, failure, std::move(detail), std::string(raw)};
}

}  // namespace

std::optional<std::string> extract_json_block(std::string_view raw) {
  if (auto fenced = fenced_block(raw)) return std::string(trim(*fenced));
  // An unterminated fence still gets the brace scan on whatever follows it.
  if (auto object = balanced_object(raw)) return std::string(*object);
  return std::nullopt;
}

ParseOutcome parse_scored_response(std::string_view raw) {
  auto block = extract_json_block(raw);
  if (!block) return invalid(raw, ParseFailure::NoJsonFound);

  json doc = json::parse(*block, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return invalid(raw, ParseFailure::MalformedJson);

  auto score = doc.find("similarity_score");
  if (score == doc.end()) return invalid(raw, ParseFailure::MissingScore);
  if (!score->is_number()) return invalid(raw, ParseFailure::NonNumericScore, score->dump());
  const double value = score->get<double>();
  if (!(value >= 0.0 && value <= 1.0)) return invalid(raw, ParseFailure::OutOfRangeScore, score->dump());

  ScoredResponse response;
  response.similarity_score = value;
  if (auto just = doc.find("justification"); just != doc.end()) {
    response.justification = just->is_string() ? just->get<std::string>() : just->dump();
  }
  response.key_matching_objects = string_list(doc, "key_matching_objects");
  response.key_mismatched_objects = string_list(doc, "key_mismatched_objects");
  return {std::move(response), ParseFailure::NoJsonFound, {}, std::string(raw)};
}

json to_json(const ScoredResponse& r) {
  return {{"similarity_score", r.similarity_score},
          {"justification", r.justification},
          {"key_matching_objects", r.key_matching_objects},
          {"key_mismatched_objects", r.key_mismatched_objects}};
}

json to_json(const ParseOutcome& outcome) {
  json doc = {{"raw_output", outcome.raw_text}};
  if (outcome.valid()) {
    doc["status"] = "valid";
    doc["response"] = to_json(*outcome.response);
  } else {
    doc["status"] = "invalid";
    doc["reason"] = to_string(outcome.failure);
    doc["detail"] = outcome.detail;
  }
  return doc;
}

ParseOutcome parse_outcome_from_json(const json& doc) {
  try {
    ParseOutcome outcome;
    outcome.raw_text = doc.at("raw_output").get<std::string>();
    if (doc.at("status") == "valid") {
      const auto& r = doc.at("response");
      outcome.response = ScoredResponse{r.at("similarity_score").get<double>(), r.at("justification").get<std::string>(),
                                        r.at("key_matching_objects").get<std::vector<std::string>>(),
                                        r.at("key_mismatched_objects").get<std::vector<std::string>>()};
      return outcome;
    }
    const auto reason = doc.at("reason").get<std::string>();
    for (auto f : {ParseFailure::NoJsonFound, ParseFailure::MalformedJson, ParseFailure::MissingScore,
                   ParseFailure::NonNumericScore, ParseFailure::OutOfRangeScore}) {
      if (reason == to_string(f)) outcome.failure = f;
    }
    outcome.detail = doc.value("detail", "");
    return outcome;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreError, std::string("bad parse outcome record: ") + e.what());
  }
}

}  // namespace vpr
