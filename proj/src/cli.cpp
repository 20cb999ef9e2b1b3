// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ameval/bias.hpp"
#include "ameval/forge.hpp"
#include "ameval/report.hpp"
#include "ameval/review.hpp"
#include "ameval/runner.hpp"

namespace fs = std::filesystem;

namespace ameval {

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto part = trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!part.empty()) out.emplace_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path r(p);
  return r.is_relative() ? (base / r).lexically_normal() : r;
}

json load_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string config;
  std::string models;
  std::string tasks;
  std::optional<double> threshold;
  std::optional<std::int64_t> seed;
  bool resume = false;
  std::string format = "markdown";
};

int cmd_run_eval(const EvalArgs& a, std::ostream& out) {
  const auto config = load_run_config(a.config);
  RunOptions opt;
  opt.models = split_csv(a.models);
  opt.tasks = split_csv(a.tasks);
  opt.threshold = a.threshold;
  opt.seed = a.seed;
  opt.resume = a.resume;
  Gateway gateway;
  const auto summary = run_eval(config, opt, gateway);
  spdlog::info("attempts: {} new, {} reused; judgments: {} new, {} reused; wire attempts: {}",
               summary.attempts_made, summary.attempts_reused, summary.judgments_made, summary.judgments_reused,
               summary.wire_attempts);
  out << emit(summary.leaderboard, parse_output_format(a.format));
  return 0;
}

int cmd_report(const std::string& run_dir, const std::optional<double>& threshold, const std::string& format,
               std::ostream& out) {
  auto rec = load_run(run_dir);
  if (threshold) {
    if (*threshold < 0) throw ConfigError("threshold must be >= 0");
    rec.manifest.winner_threshold = *threshold;
  }
  out << emit(compute_leaderboard(rec.manifest, rec.attempts, rec.judgments), parse_output_format(format));
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<PairScores> load_pair_scores(const fs::path& path) {
  std::vector<PairScores> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    if (!j.contains("a_round1")) return;  // absolute judgments carry no rounds
    out.push_back({j.at("a_round1").get<double>(), j.at("b_round1").get<double>(), j.at("a_round2").get<double>(),
                   j.at("b_round2").get<double>()});
  });
  return out;
}

int cmd_run_bias(const std::string& file, const std::string& format, std::ostream& out) {
  const fs::path path(file);
  const auto doc = load_json_file(path);
  const auto base = path.parent_path();
  const auto dir = resolve(base, doc.value("output_dir", std::string("bias")));
  bool ran = false;

  if (doc.contains("consistency")) {
    const auto& c = doc["consistency"];
    const auto pairs = load_pair_scores(resolve(base, c.at("pairs").get<std::string>()));
    std::vector<double> thresholds = c.value("thresholds", std::vector<double>{0, 0.5, 1, 1.5, 2, 2.5, 3});
    const auto curve = consistency_curve(pairs, thresholds);
    write_text_file(dir / "consistency_curve.csv", consistency_curve_csv(curve));
    out << emit(curve, parse_output_format(format));
    ran = true;
  }
  if (doc.contains("position")) {
    const auto& p = doc["position"];
    std::vector<std::pair<double, double>> samples;
    if (p.contains("pairs")) {
      samples = position_samples(load_pair_scores(resolve(base, p["pairs"].get<std::string>())));
    } else {
      for_each_jsonl(resolve(base, p.at("samples").get<std::string>()), [&](const json& j, std::size_t) {
        samples.emplace_back(j.at("first").get<double>(), j.at("second").get<double>());
      });
    }
    json result;
    try {
      const auto r = position_bias_experiment(samples);
      result = to_json(r.test);
      result["warnings"] = r.warnings;
    } catch (const DegenerateInputError& e) {
      result = json{{"error", e.what()}};
    }
    write_text_file(dir / "position_bias.json", result.dump(2) + "\n");
    out << "position bias: " << result.dump() << "\n";
    ran = true;
  }
  if (doc.contains("length")) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<ScoredAnswer>> by_question;
    for_each_jsonl(resolve(base, doc["length"].at("answers").get<std::string>()), [&](const json& j, std::size_t) {
      const auto q = j.at("question_id").get<std::string>();
      if (!by_question.contains(q)) order.push_back(q);
      by_question[q].push_back({j.at("text").get<std::string>(), j.at("score").get<double>()});
    });
    std::vector<std::vector<ScoredAnswer>> questions;
    for (const auto& q : order) questions.push_back(by_question[q]);
    const auto r = length_bias_experiment(questions);
    json result{{"group_long_mean", r.group_long_mean}, {"group_short_mean", r.group_short_mean},
                {"n_long", r.n_long},                   {"n_short", r.n_short},
                {"per_question_diffs", r.per_question_diffs},
                {"split_rule", r.split_rule},           {"warnings", r.warnings},
                {"test", r.test ? to_json(*r.test) : json(nullptr)}};
    write_text_file(dir / "length_bias.json", result.dump(2) + "\n");
    out << "length bias: " << result.dump() << "\n";
    ran = true;
  }
  if (doc.contains("verbosity")) {
    std::vector<VerbosityPair> pairs;
    for_each_jsonl(resolve(base, doc["verbosity"].at("pairs").get<std::string>()), [&](const json& j, std::size_t) {
      pairs.push_back({j.at("concise_score").get<double>(), j.at("verbose_score").get<double>(),
                       parse_verbosity_type(j.at("type").get<std::string>())});
    });
    json result = json::object();
    for (const auto& [type, b] : verbosity_experiment(pairs)) {
      result[std::string(to_string(type))] = {
          {"mean_diff", b.mean_diff}, {"n", b.n}, {"test", b.test ? to_json(*b.test) : json(nullptr)}};
    }
    write_text_file(dir / "verbosity.json", result.dump(2) + "\n");
    out << "verbosity: " << result.dump() << "\n";
    ran = true;
  }
  if (!ran) throw ConfigError(path.string() + ": no experiment section (consistency, position, length, verbosity)");
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_forge(const std::string& file, std::ostream& out) {
  const fs::path path(file);
  const auto doc = load_json_file(path);
  const auto base = path.parent_path();
  if (!doc.contains("output_dir")) throw ConfigError(path.string() + ": missing \"output_dir\"");
  const auto dir = resolve(base, doc["output_dir"].get<std::string>());
  Gateway gateway;

  if (doc.contains("corpus")) {
    if (!doc.contains("filter")) throw ConfigError(path.string() + ": \"corpus\" needs a \"filter\" model");
    const auto filter = profile_from_json(doc["filter"], base, 0.0);
    const auto docs = load_corpus(resolve(base, doc["corpus"].get<std::string>()));
    const auto result = clean_corpus(gateway, filter, docs);
    write_text_file(dir / "cleaning_report.csv", cleaning_report_csv(docs, result));
    std::string kept;
    for (const auto& d : result.kept) kept += to_json(d).dump() + "\n";
    write_text_file(dir / "corpus_kept.jsonl", kept);
    out << fmt::format("cleaning: {} kept, {} rejected\n", result.kept.size(), result.rejected.size());
  }

  if (doc.contains("questions")) {
    for (const char* key : {"generator", "judge"}) {
      if (!doc.contains(key)) throw ConfigError(path.string() + ": \"questions\" needs a \"" + key + "\" model");
    }
    const auto generator = profile_from_json(doc["generator"], base, 0.2);
    const auto judge = profile_from_json(doc["judge"], base, 0.0);
    std::unique_ptr<Retriever> retriever;
    if (doc.contains("retrieval")) {
      const auto passages = load_json_file(resolve(base, doc["retrieval"].get<std::string>()));
      retriever = std::make_unique<StaticRetriever>(
          passages.get<std::map<std::string, std::vector<std::string>, std::less<>>>());
    }
    const auto selection = doc.value("selection", std::string("absolute"));
    SelectionMode mode;
    if (selection == "absolute") {
      mode = SelectionMode::absolute;
    } else if (selection == "pairwise_tournament") {
      mode = SelectionMode::pairwise_tournament;
    } else {
      throw ConfigError("unknown selection mode \"" + selection + "\"");
    }
    const double threshold = doc.value("threshold", 0.0);
    std::vector<SftRecord> records;
    std::string details;
    std::size_t skipped = 0;
    for_each_jsonl(resolve(base, doc["questions"].get<std::string>()), [&](const json& j, std::size_t) {
      const auto id = j.at("question_id").get<std::string>();
      const auto question = j.at("question").get<std::string>();
      std::optional<std::string> material;
      if (j.contains("material") && !j["material"].is_null()) material = j["material"].get<std::string>();
      auto gen = generate_candidates(gateway, generator, id, question, material, retriever.get());
      if (gen.candidates.empty()) {
        spdlog::warn("{}: no candidates generated; question skipped", id);
        ++skipped;
        return;
      }
      records.push_back(select_best(gateway, judge, id, question, std::move(gen.candidates), mode, threshold));
      details += to_json(records.back()).dump() + "\n";
    });
    write_text_file(dir / "sft_records.jsonl", details);
    const auto n = export_sft(records, dir / "sft.jsonl");
    out << fmt::format("sft: {} records written, {} questions skipped\n", n, skipped);
  }
  return 0;
}

int cmd_serve(const std::string& file) {
  serve_review(load_review_config(file));
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ameval: evaluation harness for financial-domain language models", "ameval"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  EvalArgs eval;
  auto* run_eval_cmd = app.add_subcommand("run-eval", "Run an evaluation from a run config");
  run_eval_cmd->add_option("config,--config", eval.config, "Run config (JSON)");
  run_eval_cmd->add_option("--models", eval.models, "Comma-separated model names to evaluate");
  run_eval_cmd->add_option("--tasks", eval.tasks, "Comma-separated task ids to evaluate");
  run_eval_cmd->add_option("--threshold", eval.threshold, "Winner threshold override");
  run_eval_cmd->add_option("--seed", eval.seed, "RNG seed override");
  run_eval_cmd->add_flag("--resume", eval.resume, "Continue a partially completed run directory");
  run_eval_cmd->add_option("--format", eval.format, "Leaderboard format printed to stdout")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}));

  std::string bias_file, bias_format = "csv";
  auto* bias_cmd = app.add_subcommand("run-bias", "Run bias experiments described in a JSON file");
  bias_cmd->add_option("experiment,--config", bias_file, "Experiment file (JSON)");
  bias_cmd->add_option("--format", bias_format, "Consistency curve format printed to stdout")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}));

  std::string forge_file;
  auto* forge_cmd = app.add_subcommand("forge-data", "Clean a corpus and build SFT data");
  forge_cmd->add_option("config,--config", forge_file, "Forge config (JSON)");

  std::string serve_file;
  auto* serve_cmd = app.add_subcommand("serve-review", "Serve the human review API");
  serve_cmd->add_option("config,--config", serve_file, "Review service config (JSON)");

  std::string run_dir, report_format = "markdown";
  std::optional<double> report_threshold;
  auto* report_cmd = app.add_subcommand("report", "Rebuild the leaderboard of a run directory");
  report_cmd->add_option("run_dir", run_dir, "Run directory")->required();
  report_cmd->add_option("--format", report_format, "Output format")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}));
  report_cmd->add_option("--threshold", report_threshold, "Re-resolve judgments at this winner threshold");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  const char* stage = "";
  auto missing = [&](const std::string& value, const char* what) {
    if (!value.empty()) return false;
    err << "ameval " << stage << ": missing " << what << "\n";
    return true;
  };
  try {
    if (*run_eval_cmd) {
      stage = "run-eval";
      if (missing(eval.config, "run config path")) return 2;
      return cmd_run_eval(eval, out);
    }
    if (*bias_cmd) {
      stage = "run-bias";
      if (missing(bias_file, "experiment file path")) return 2;
      return cmd_run_bias(bias_file, bias_format, out);
    }
    if (*forge_cmd) {
      stage = "forge-data";
      if (missing(forge_file, "forge config path")) return 2;
      return cmd_forge(forge_file, out);
    }
    if (*serve_cmd) {
      stage = "serve-review";
      if (missing(serve_file, "review config path")) return 2;
      return cmd_serve(serve_file);
    }
    if (*report_cmd) {
      stage = "report";
      return cmd_report(run_dir, report_threshold, report_format, out);
    }
  } catch (const std::exception& e) {
    err << "ameval " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace ameval
