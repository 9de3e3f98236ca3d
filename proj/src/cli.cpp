#include "vpr/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "vpr/config.hpp"
#include "vpr/error.hpp"
#include "vpr/reference_record.hpp"

namespace vpr {

namespace {

// Registers a --key option for every listed setting; only settings the user
// actually passed end up in `given`.
class SettingFlags {
 public:
  SettingFlags(CLI::App& app, std::initializer_list<std::string_view> keys) {
    for (auto key : keys) {
      std::string name(key);
      if (name == "mock") {
        app.add_flag("--mock", mock_, "Score with the built-in mock model instead of an endpoint");
        continue;
      }
      auto& value = values_[name];
      options_[name] = app.add_option("--" + name, value, "default: " + default_settings().at(name));
    }
    app.add_option("--config", config_file_, "File of key = value settings; flags override it");
  }

  RunConfig resolve() const {
    SettingMap given;
    for (const auto& [name, option] : options_) {
      if (option->count() > 0) given[name] = values_.at(name);
    }
    if (mock_) given["mock"] = "true";
    const SettingMap file = config_file_.empty() ? SettingMap{} : load_config_file(config_file_);
    return resolve_run_config(file, given);
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_file_;
  bool mock_ = false;
};

EmbeddingFormat format_for(const std::string& flag, const std::filesystem::path& path) {
  return flag.empty() ? embedding_format_for(path) : parse_embedding_format(flag);
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

PlaceIndex load_places(const std::vector<std::string>& manifests) {
  PlaceIndex places;
  for (const auto& m : manifests) places.add(load_manifest(m));
  return places;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::stop_token stop) {
  CLI::App app{"Coarse retrieval, multimodal reranking and recall evaluation for place recognition", "vpr-rerank"};
  app.require_subcommand(1);

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Top-N candidates per query by descriptor similarity");
  std::string query_emb, db_emb, query_fmt, db_fmt, retrieve_out;
  retrieve->add_option("--query-embeddings", query_emb)->required();
  retrieve->add_option("--db-embeddings", db_emb)->required();
  retrieve->add_option("--query-format", query_fmt, "jsonl or binary (default: .jsonl files are jsonl, others binary)");
  retrieve->add_option("--db-format", db_fmt, "jsonl or binary (default: .jsonl files are jsonl, others binary)");
  retrieve->add_option("--out", retrieve_out)->required();
  SettingFlags retrieve_settings(*retrieve, {"top-n", "metric"});

  // rerank
  auto* rerank = app.add_subcommand("rerank", "Rescore candidate lists with a multimodal model");
  std::string candidates_path, rerank_out, telemetry_out;
  std::vector<std::string> rerank_manifests;
  rerank->add_option("--candidates", candidates_path)->required();
  rerank->add_option("--manifest", rerank_manifests, "Place manifest (repeatable)")->required();
  rerank->add_option("--out", rerank_out)->required();
  rerank->add_option("--telemetry-out", telemetry_out);
  SettingFlags rerank_settings(
      *rerank, {"prompt-file", "endpoint", "model", "temperature", "single-temperature", "mode", "samples", "lambda",
                "variance-mode", "concurrency", "timeout-s", "max-retries", "max-side", "cache-dir", "mock",
                "mock-seed", "mock-noise", "mock-noise-profile", "mock-malform-rate", "mock-fence-rate",
                "mock-reference-m"});

  // eval
  auto* eval = app.add_subcommand("eval", "Recall@K of a ranking or candidate file");
  std::string ranking_path, eval_out;
  std::vector<std::string> eval_manifests;
  eval->add_option("--ranking", ranking_path)->required();
  eval->add_option("--manifest", eval_manifests, "Place manifest (repeatable)")->required();
  eval->add_option("--out", eval_out);
  SettingFlags eval_settings(*eval, {"k", "radius-m"});

  // report
  auto* report = app.add_subcommand("report", "Compare coarse and reranked recall reports");
  std::string coarse_report, reranked_report, report_out;
  report->add_option("--coarse", coarse_report)->required();
  report->add_option("--reranked", reranked_report)->required();
  report->add_option("--out", report_out);

  auto* mock_check = app.add_subcommand("mock-check", "Replay the stored five-sample record through calibration");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    if (*retrieve) {
      const RunConfig cfg = retrieve_settings.resolve();
      const auto queries = load_embeddings(query_emb, format_for(query_fmt, query_emb));
      const auto db = load_embeddings(db_emb, format_for(db_fmt, db_emb));
      const auto lists = retrieve_batch(queries, db, cfg.top_n, cfg.metric);
      write_candidates(retrieve_out, lists);
      out << "wrote " << lists.size() << " candidate lists to " << retrieve_out << '\n';
    } else if (*rerank) {
      const RunConfig cfg = rerank_settings.resolve();
      if (!cfg.mock && cfg.model.endpoint_url.empty()) {
        throw Error(ErrorCode::UsageError, "rerank needs --endpoint or --mock");
      }
      const PlaceIndex places = load_places(rerank_manifests);
      const auto coarse = load_candidates(candidates_path);
      std::shared_ptr<Transport> transport;
      if (cfg.mock) {
        transport = std::make_shared<MockTransport>(cfg.mock_model);
      } else {
        transport = std::make_shared<HttpTransport>();
      }
      Gateway gateway(transport, cfg.model);
      std::optional<PairCache> cache;
      if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);
      PipelineConfig pcfg;
      pcfg.mode = cfg.scoring;
      pcfg.images.max_side = cfg.max_side;
      pcfg.model_tag = cfg.model_tag();
      pcfg.pair_concurrency = cfg.model.max_concurrency;
      PairScorer scorer(gateway, cfg.prompt(), pcfg, cache ? &*cache : nullptr);
      const auto result = rerank_dataset(coarse, places, scorer, rerank_out, stop);
      if (!telemetry_out.empty()) write_json_file(telemetry_out, to_json(result.telemetry));
      out << "reranked " << result.rankings.size() << " of " << coarse.size() << " queries ("
          << gateway.requests_sent() << " requests";
      if (cache) out << ", " << cache->hits() << " cached pairs";
      out << ")\n";
      if (!result.complete) {
        err << "stopped early; rerun with the same --cache-dir to resume\n";
        return 1;
      }
    } else if (*eval) {
      const RunConfig cfg = eval_settings.resolve();
      const PlaceIndex places = load_places(eval_manifests);
      const auto rankings = load_ranked_ids(ranking_path);
      const auto recall = recall_at_k(rankings, places, cfg.eval);
      out << to_text(recall);
      if (!eval_out.empty()) write_json_file(eval_out, to_json(recall));
    } else if (*report) {
      const auto comparison = build_report(recall_report_from_json(read_json_file(coarse_report)),
                                           recall_report_from_json(read_json_file(reranked_report)));
      out << to_text(comparison);
      if (!report_out.empty()) write_json_file(report_out, to_json(comparison));
    } else if (*mock_check) {
      const auto check = reference::run_check();
      out << "mean " << nlohmann::json(check.result.mean).dump() << ", std " << nlohmann::json(check.result.stddev).dump()
          << ", final " << nlohmann::json(check.result.final_score).dump() << '\n';
      for (const auto& f : check.failures) err << f << '\n';
      out << (check.passed ? "PASS" : "FAIL") << '\n';
      return check.passed ? 0 : 1;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace vpr
