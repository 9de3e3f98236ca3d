#include "vpr/config.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vpr/encoding.hpp"
#include "vpr/error.hpp"

namespace vpr {

const SettingMap& default_settings() {
  static const SettingMap defaults{
      {"top-n", "20"},
      {"metric", "cosine"},
      {"prompt-file", ""},
      {"endpoint", ""},
      {"model", ""},
      {"temperature", "0.7"},
      {"single-temperature", "0"},
      {"mode", "uasc"},
      {"samples", "5"},
      {"lambda", "0.5"},
      {"variance-mode", "population"},
      {"radius-m", "25"},
      {"k", "1,5,10"},
      {"concurrency", "4"},
      {"timeout-s", "120"},
      {"max-retries", "3"},
      {"max-side", "0"},
      {"cache-dir", ""},
      {"mock", "false"},
      {"mock-seed", "0"},
      {"mock-noise", "0.05"},
      {"mock-noise-profile", "constant"},
      {"mock-malform-rate", "0"},
      {"mock-fence-rate", "0"},
      {"mock-reference-m", "100"},
  };
  return defaults;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, std::string_view expected) {
  throw Error(ErrorCode::UsageError, "--" + key + " '" + value + "': expected " + std::string(expected));
}

double to_double(const SettingMap& s, const std::string& key) {
  const std::string& v = s.at(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long long to_integer(const SettingMap& s, const std::string& key) {
  const std::string& v = s.at(key);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(const SettingMap& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

template <typename F>
auto checked(const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    throw Error(ErrorCode::UsageError, "--" + key + ": " + e.what());
  }
}

}  // namespace

SettingMap parse_config_text(std::string_view text) {
  SettingMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto sep = line.find_first_of("=:");
    if (sep == std::string::npos) {
      throw Error(ErrorCode::UsageError, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, sep));
    if (key.starts_with("--")) key.erase(0, 2);
    if (key == "api-key" || key == "api_key" || key == "MLLM_API_KEY") {
      throw Error(ErrorCode::UsageError, "the API key is read only from the MLLM_API_KEY environment variable");
    }
    if (!default_settings().contains(key)) {
      throw Error(ErrorCode::UsageError, "config line " + std::to_string(line_no) + ": unknown setting '" + key + "'");
    }
    out[key] = unquote(trim(line.substr(sep + 1)));
  }
  return out;
}

SettingMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "config file " + path.string());
  return parse_config_text(std::string(std::istreambuf_iterator<char>(in), {}));
}

std::vector<int> parse_k_values(std::string_view text) {
  std::vector<int> ks;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), k);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::InvalidConfig, "bad K value '" + item + "'");
    }
    ks.push_back(k);
  }
  return ks;
}

RunConfig resolve_run_config(const SettingMap& file, const SettingMap& flags) {
  SettingMap s = default_settings();
  for (const auto* layer : {&file, &flags}) {
    for (const auto& [key, value] : *layer) {
      if (!s.contains(key)) throw Error(ErrorCode::UsageError, "unknown setting '" + key + "'");
      s[key] = value;
    }
  }

  RunConfig cfg;
  const auto top_n = to_integer(s, "top-n");
  if (top_n < 1) bad_value("top-n", s["top-n"], "a positive integer");
  cfg.top_n = static_cast<std::size_t>(top_n);
  cfg.metric = checked("metric", [&] { return parse_metric(s["metric"]); });
  cfg.prompt_file = s["prompt-file"];

  cfg.model.endpoint_url = s["endpoint"];
  cfg.model.model_name = s["model"];
  cfg.model.temperature = to_double(s, "temperature");
  cfg.model.request_timeout = Seconds(to_double(s, "timeout-s"));
  cfg.model.max_retries = static_cast<int>(to_integer(s, "max-retries"));
  cfg.model.max_concurrency = static_cast<int>(to_integer(s, "concurrency"));
  checked("endpoint", [&] {
    cfg.model.validate();
    return 0;
  });

  cfg.scoring.kind = checked("mode", [&] { return parse_scoring_kind(s["mode"]); });
  cfg.scoring.sample_temperature = cfg.model.temperature;
  cfg.scoring.single_pass_temperature = to_double(s, "single-temperature");
  cfg.scoring.calibration.lambda = to_double(s, "lambda");
  cfg.scoring.calibration.n_samples = static_cast<int>(to_integer(s, "samples"));
  cfg.scoring.calibration.variance_mode = checked("variance-mode", [&] { return parse_variance_mode(s["variance-mode"]); });
  checked("samples", [&] {
    cfg.scoring.validate();
    return 0;
  });

  cfg.eval.radius_m = to_double(s, "radius-m");
  cfg.eval.k_values = checked("k", [&] { return parse_k_values(s["k"]); });
  checked("k", [&] {
    cfg.eval.validate();
    return 0;
  });

  cfg.cache_dir = s["cache-dir"];
  cfg.max_side = static_cast<int>(to_integer(s, "max-side"));
  if (cfg.max_side < 0) bad_value("max-side", s["max-side"], "a non-negative integer");

  cfg.mock = to_bool(s, "mock");
  const auto seed = to_integer(s, "mock-seed");
  if (seed < 0) bad_value("mock-seed", s["mock-seed"], "a non-negative integer");
  cfg.mock_model.seed = static_cast<std::uint64_t>(seed);
  cfg.mock_model.noise_scale = to_double(s, "mock-noise");
  cfg.mock_model.noise_profile = checked("mock-noise-profile", [&] { return parse_noise_profile(s["mock-noise-profile"]); });
  cfg.mock_model.malform_rate = to_double(s, "mock-malform-rate");
  cfg.mock_model.fence_rate = to_double(s, "mock-fence-rate");
  cfg.mock_model.reference_distance_m = to_double(s, "mock-reference-m");
  checked("mock", [&] {
    cfg.mock_model.validate();
    return 0;
  });

  if (cfg.mock && !cfg.model.endpoint_url.empty()) {
    throw Error(ErrorCode::UsageError, "--mock and --endpoint are mutually exclusive");
  }
  if (cfg.mock) {
    cfg.model.endpoint_url = "http://mock";
    if (cfg.model.model_name.empty()) cfg.model.model_name = "mock";
  }
  return cfg;
}

PromptTemplate RunConfig::prompt() const {
  return prompt_file.empty() ? default_template() : load_template_file(prompt_file);
}

std::string RunConfig::model_tag() const {
  if (!mock) return model.model_name + "@" + model.endpoint_url;
  std::ostringstream desc;
  desc << mock_model.seed << '|' << nlohmann::json(mock_model.noise_scale).dump() << '|'
       << to_string(mock_model.noise_profile) << '|' << nlohmann::json(mock_model.malform_rate).dump() << '|'
       << nlohmann::json(mock_model.fence_rate).dump() << '|' << nlohmann::json(mock_model.reference_distance_m).dump();
  return "mock:" + to_hex(fnv1a64(desc.str()));
}

}  // namespace vpr
