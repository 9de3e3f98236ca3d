#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vpr/descriptors.hpp"
#include "vpr/evaluation.hpp"
#include "vpr/gateway.hpp"
#include "vpr/mock_model.hpp"
#include "vpr/pipeline.hpp"

namespace vpr {

// Setting name (the flag name without dashes) -> textual value.
using SettingMap = std::map<std::string, std::string>;

// Every setting a config file or flag may carry, with its built-in default.
const SettingMap& default_settings();

// Flat "key = value" (or "key: value") lines; '#' starts a comment. Unknown keys
// are a UsageError, and so is any attempt to put the API key in the file.
SettingMap parse_config_text(std::string_view text);
SettingMap load_config_file(const std::filesystem::path& path);

struct RunConfig {
  std::size_t top_n = 20;
  Metric metric = Metric::cosine;
  std::filesystem::path prompt_file;
  ModelConfig model;
  ScoringMode scoring;
  EvalConfig eval;
  std::filesystem::path cache_dir;
  bool mock = false;
  MockConfig mock_model;
  int max_side = 0;

  PromptTemplate prompt() const;  // default template unless prompt_file is set
  std::string model_tag() const;  // model name, or a digest of the mock settings
};

// defaults <- file <- flags; later layers win key by key. Every value is parsed
// and range-checked here so no pipeline work starts on a bad configuration.
RunConfig resolve_run_config(const SettingMap& file, const SettingMap& flags);

std::vector<int> parse_k_values(std::string_view text);

}  // namespace vpr
