// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ameval/bias.hpp"

namespace fs = std::filesystem;

namespace ameval {

namespace {

constexpr std::string_view kNoAnswer = "(no answer)";

using AttemptKey = std::tuple<std::string, std::string, PromptMode, int, std::string>;

AttemptKey key_of(const Attempt& a) {
  return {a.model_name, a.task_id, a.mode, a.run_index, a.item_id};
}

std::string pairwise_id(std::string_view task, std::string_view item, int run, std::string_view a,
                        std::string_view b) {
  return fmt::format("{}/{}/run{}/{}~{}", task, item, run, a, b);
}

std::string absolute_id(std::string_view task, std::string_view item, int run, std::string_view m) {
  return fmt::format("{}/{}/run{}/{}", task, item, run, m);
}

std::string baseline_id(std::string_view task, std::string_view item, int run, std::string_view m) {
  return fmt::format("{}/{}/run{}/{}~baseline", task, item, run, m);
}

json messages_json(const std::vector<ChatMessage>& msgs) {
  json arr = json::array();
  for (const auto& m : msgs) arr.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return arr;
}

json verdict_json(const JudgeVerdict& v, const std::vector<ChatMessage>& prompt) {
  return json{{"order", to_string(v.order)},
              {"per_dimension_first", v.per_dimension_first},
              {"per_dimension_second", v.per_dimension_second},
              {"total_first", v.total_first},
              {"total_second", v.total_second},
              {"clamped", v.clamped},
              {"rationale", v.rationale},
              {"raw_judge_output", v.raw_judge_output},
              {"prompt", messages_json(prompt)}};
}

PairScores scores_of(const json& rec) {
  return PairScores{rec.at("a_round1").get<double>(), rec.at("b_round1").get<double>(),
                    rec.at("a_round2").get<double>(), rec.at("b_round2").get<double>()};
}

class AppenderPool {
 public:
  JsonlAppender& get(const fs::path& path) {
    std::lock_guard lock(mutex_);
    auto& slot = appenders_[path.string()];
    if (!slot) slot = std::make_unique<JsonlAppender>(path);
    return *slot;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<JsonlAppender>> appenders_;
};

// Runs fn(0..n-1) on at most `limit` threads. fn must not throw.
void parallel_for(std::size_t n, int limit, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::atomic<std::size_t> next{0};
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, limit)));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

struct FailureLog {
  std::mutex mutex;
  std::size_t count = 0;
  std::string first;

  void add(const std::string& what) {
    std::lock_guard lock(mutex);
    if (count++ == 0) first = what;
    spdlog::error("{}", what);
  }
};

const std::string& answer_text(const std::map<AttemptKey, const Attempt*>& index, const std::string& model,
                               const std::string& task, int run, const std::string& item) {
  const auto it = index.find(AttemptKey{model, task, PromptMode::PLAIN, run, item});
  if (it == index.end()) {
    throw RunError(fmt::format("no answer from {} for {}/{} run {}", model, task, item, run));
  }
  return it->second->raw_output;
}

std::string judgeable(const std::string& answer) {
  return trim(answer).empty() ? std::string(kNoAnswer) : answer;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

json to_json(const RunManifest& m) {
  return json{{"format", 1},
              {"dataset", serialize_dataset(m.dataset)},
              {"models", m.models},
              {"judge", m.judge},
              {"runs_per_item", m.runs_per_item},
              {"winner_threshold", m.winner_threshold},
              {"rng_seed", m.rng_seed},
              {"baseline_model", m.baseline_model ? json(*m.baseline_model) : json(nullptr)},
              {"self_judging", m.self_judging}};
}

RunManifest manifest_from_json(const json& doc) {
  RunManifest m;
  m.dataset = parse_dataset(doc.at("dataset").get<std::string>());
  m.models = doc.at("models").get<std::vector<std::string>>();
  m.judge = doc.at("judge").get<std::string>();
  m.runs_per_item = doc.at("runs_per_item").get<int>();
  m.winner_threshold = doc.at("winner_threshold").get<double>();
  m.rng_seed = doc.at("rng_seed").get<std::int64_t>();
  if (const auto& b = doc.at("baseline_model"); !b.is_null()) m.baseline_model = b.get<std::string>();
  m.self_judging = doc.at("self_judging").get<bool>();
  return m;
}

fs::path attempt_file(const fs::path& run_dir, std::string_view model, std::string_view task, PromptMode mode,
                      int run_index) {
  return run_dir / "attempts" /
         fmt::format("{}__{}__{}__run{}.jsonl", sanitize_component(model), sanitize_component(task),
                     to_string(mode), run_index);
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<PairScores> judged_pair_scores(std::span<const json> judgments) {
  std::vector<PairScores> out;
  for (const auto& j : judgments) {
    const auto kind = j.value("kind", std::string());
    if (kind == "pairwise" || kind == "baseline") out.push_back(scores_of(j));
  }
  return out;
}

Leaderboard compute_leaderboard(const RunManifest& m, std::span<const Attempt> attempts,
                                std::span<const json> judgments) {
  std::map<AttemptKey, const Attempt*> att;
  for (const auto& a : attempts) att.emplace(key_of(a), &a);
  std::map<std::string, const json*> jud;
  for (const auto& j : judgments) jud.emplace(j.at("id").get<std::string>(), &j);

  auto judgment = [&](const std::string& id) -> const json& {
    const auto it = jud.find(id);
    if (it == jud.end()) throw RunError("missing judgment " + id);
    return *it->second;
  };

  std::vector<LeaderboardEntry> entries;
  std::vector<std::string> columns;
  for (const auto& task : m.dataset.tasks) {
    columns.push_back(task.task_id);
    std::vector<const EvalItem*> items;
    for (const auto& it : m.dataset.items) {
      if (it.task_id == task.task_id) items.push_back(&it);
    }
    if (items.empty()) continue;
    const int n_items = static_cast<int>(items.size());

    auto finish = [&](const std::string& model, PromptMode mode, const std::vector<double>& runs) {
      const auto stats = average_runs(runs);
      return TaskScore{model, task.task_id, mode, stats.mean, stats.stddev,
                       static_cast<int>(runs.size()), n_items};
    };

    switch (task.scoring_method) {
      case ScoringMethod::accuracy: {
        GoldMap gold;
        for (const auto* it : items) gold.emplace(it->item_id, *it->gold_labels);
        for (const auto& model : m.models) {
          std::vector<TaskScore> per_mode;
          for (const auto mode : task.prompting_modes) {
            std::vector<double> runs;
            for (int k = 1; k <= m.runs_per_item; ++k) {
              std::vector<Attempt> subset;
              for (const auto* it : items) {
                const auto a = att.find(AttemptKey{model, task.task_id, mode, k, it->item_id});
                if (a == att.end()) {
                  throw RunError(fmt::format("missing attempt: {} {} {} run {} item {}", model, task.task_id,
                                             to_string(mode), k, it->item_id));
                }
                subset.push_back(*a->second);
              }
              runs.push_back(score_accuracy(subset, gold));
            }
            per_mode.push_back(finish(model, mode, runs));
          }
          TaskScore best = per_mode.front();
          const auto aot = std::find_if(per_mode.begin(), per_mode.end(),
                                        [](const TaskScore& s) { return s.mode == PromptMode::AOT; });
          const auto cot = std::find_if(per_mode.begin(), per_mode.end(),
                                        [](const TaskScore& s) { return s.mode == PromptMode::COT; });
          if (aot != per_mode.end() && cot != per_mode.end()) best = aggregate_modes(*aot, *cot);
          entries.push_back(entry_from(best));
        }
        break;
      }
      case ScoringMethod::judge_pairwise: {
        if (m.models.size() < 2) break;
        std::map<std::string, std::vector<double>> runs;
        for (int k = 1; k <= m.runs_per_item; ++k) {
          std::map<std::string, double> points;
          std::map<std::string, int> games;
          for (const auto* it : items) {
            for (std::size_t i = 0; i < m.models.size(); ++i) {
              for (std::size_t j = i + 1; j < m.models.size(); ++j) {
                const auto& a = m.models[i];
                const auto& b = m.models[j];
                const auto o = resolve_pair(scores_of(judgment(pairwise_id(task.task_id, it->item_id, k, a, b))),
                                            m.winner_threshold);
                points[a] += o.winner == Winner::A ? 1.0 : o.winner == Winner::tie ? 0.5 : 0.0;
                points[b] += o.winner == Winner::B ? 1.0 : o.winner == Winner::tie ? 0.5 : 0.0;
                ++games[a];
                ++games[b];
              }
            }
          }
          for (const auto& model : m.models) runs[model].push_back(points[model] / games[model]);
        }
        for (const auto& model : m.models) entries.push_back(entry_from(finish(model, PromptMode::PLAIN, runs[model])));
        break;
      }
      case ScoringMethod::judge_absolute: {
        for (const auto& model : m.models) {
          std::vector<double> runs;
          for (int k = 1; k <= m.runs_per_item; ++k) {
            double sum = 0.0;
            for (const auto* it : items) {
              const auto& j = judgment(absolute_id(task.task_id, it->item_id, k, model));
              sum += j.at("total").get<double>() / j.at("scale_max").get<double>();
            }
            runs.push_back(sum / n_items);
          }
          entries.push_back(entry_from(finish(model, PromptMode::PLAIN, runs)));
        }
        break;
      }
      case ScoringMethod::non_negative_ratio: {
        for (const auto& model : m.models) {
          if (m.baseline_model && model == *m.baseline_model) continue;
          std::vector<double> runs;
          for (int k = 1; k <= m.runs_per_item; ++k) {
            std::vector<PairVerdict> verdicts;
            for (const auto* it : items) {
              const auto o = resolve_pair(scores_of(judgment(baseline_id(task.task_id, it->item_id, k, model))),
                                          m.winner_threshold);
              verdicts.push_back(o.winner == Winner::A ? PairVerdict::win
                                 : o.winner == Winner::tie ? PairVerdict::tie
                                                            : PairVerdict::loss);
            }
            runs.push_back(score_non_negative_ratio(verdicts));
          }
          entries.push_back(entry_from(finish(model, PromptMode::PLAIN, runs)));
        }
        break;
      }
    }
  }
  auto board = build_leaderboard(entries, m.models, columns);
  board.metadata = json{{"judge", m.judge},
                        {"self_judging", m.self_judging},
                        {"runs_per_item", m.runs_per_item},
                        {"winner_threshold", m.winner_threshold},
                        {"rng_seed", m.rng_seed},
                        {"baseline_model", m.baseline_model ? json(*m.baseline_model) : json(nullptr)}};
  return board;
}

// ---------------------------------------------------------------------------
// Persistence

RunRecords load_run(const fs::path& run_dir) {
  RunRecords rec;
  const auto manifest = run_dir / "manifest.json";
  if (!fs::exists(manifest)) throw RunError("run directory " + run_dir.string() + " has no manifest.json");
  try {
    rec.manifest = manifest_from_json(json::parse(read_text_file(manifest)));
  } catch (const json::exception& e) {
    throw RunError(manifest.string() + ": " + e.what());
  }
  const auto attempts_dir = run_dir / "attempts";
  if (!fs::is_directory(attempts_dir)) throw RunError("missing attempts directory: " + attempts_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(attempts_dir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    for_each_jsonl(f, [&](const json& j, std::size_t) { rec.attempts.push_back(attempt_from_json(j)); });
  }
  const auto judgments_dir = run_dir / "judgments";
  if (fs::is_directory(judgments_dir)) {
    files.clear();
    for (const auto& e : fs::directory_iterator(judgments_dir)) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      for_each_jsonl(f, [&](const json& j, std::size_t) { rec.judgments.push_back(j); });
    }
  }
  return rec;
}

Leaderboard rebuild_leaderboard(const fs::path& run_dir) {
  const auto rec = load_run(run_dir);
  return compute_leaderboard(rec.manifest, rec.attempts, rec.judgments);
}

// ---------------------------------------------------------------------------
// Live run

namespace {

void write_bias_artifacts(const fs::path& dir, std::span<const json> judgments) {
  const auto pairs = judged_pair_scores(judgments);
  if (pairs.empty()) return;
  std::vector<double> thresholds;
  for (int i = 0; i <= 10; ++i) thresholds.push_back(0.5 * i);
  write_text_file(dir / "consistency_curve.csv", consistency_curve_csv(consistency_curve(pairs, thresholds)));
  json pos;
  try {
    const auto report = position_bias_experiment(position_samples(pairs));
    pos = to_json(report.test);
    pos["warnings"] = report.warnings;
  } catch (const DegenerateInputError& e) {
    pos = json{{"error", e.what()}};
  }
  write_text_file(dir / "position_bias.json", pos.dump(2) + "\n");
}

}  // namespace

RunSummary run_eval(const RunConfig& config_in, const RunOptions& opt, Gateway& gateway) {
  const auto wire_start = gateway.wire_attempts();
  RunConfig cfg = config_in;
  if (opt.threshold) {
    if (*opt.threshold < 0) throw ConfigError("threshold must be >= 0");
    cfg.winner_threshold = *opt.threshold;
  }
  if (opt.seed) cfg.rng_seed = *opt.seed;
  if (!opt.models.empty()) {
    std::vector<ModelProfile> kept;
    for (const auto& name : opt.models) {
      const auto it = std::find_if(cfg.models.begin(), cfg.models.end(),
                                   [&](const ModelProfile& p) { return p.name == name; });
      if (it == cfg.models.end()) throw ConfigError("--models: unknown model \"" + name + "\"");
      kept.push_back(*it);
    }
    cfg.models = std::move(kept);
  }
  const TemplateSet& templates = opt.templates != nullptr ? *opt.templates : TemplateSet::defaults();

  Dataset ds = load_dataset(cfg.dataset_path);
  if (!opt.tasks.empty()) {
    for (const auto& t : opt.tasks) {
      if (ds.find_task(t) == nullptr) throw ConfigError("--tasks: unknown task \"" + t + "\"");
    }
    const std::set<std::string> keep(opt.tasks.begin(), opt.tasks.end());
    std::erase_if(ds.tasks, [&](const TaskSpec& t) { return !keep.contains(t.task_id); });
    std::erase_if(ds.items, [&](const EvalItem& i) { return !keep.contains(i.task_id); });
  }

  RunManifest manifest;
  manifest.dataset = ds;
  for (const auto& p : cfg.models) manifest.models.push_back(p.name);
  manifest.judge = cfg.judge.name;
  manifest.runs_per_item = cfg.runs_per_item;
  manifest.winner_threshold = cfg.winner_threshold;
  manifest.rng_seed = cfg.rng_seed;
  manifest.baseline_model = cfg.baseline_model;
  manifest.self_judging = cfg.self_judging();
  if (manifest.self_judging) {
    spdlog::warn("judge \"{}\" is also an evaluated model; its judged scores are flagged", cfg.judge.name);
  }

  const fs::path out = cfg.output_dir;
  if (fs::exists(out) && !fs::is_empty(out) && !opt.resume) {
    throw RunError("output directory " + out.string() + " is not empty; pass --resume to continue it");
  }
  fs::create_directories(out / "attempts");
  write_text_file(out / "manifest.json", to_json(manifest).dump(2) + "\n");

  RunRecords existing;
  existing.manifest = manifest;
  if (opt.resume) {
    auto loaded = load_run(out);
    existing.attempts = std::move(loaded.attempts);
    existing.judgments = std::move(loaded.judgments);
  }

  RunSummary summary;
  std::mutex collect_mutex;
  std::vector<Attempt> all_attempts = existing.attempts;
  std::set<AttemptKey> done;
  for (const auto& a : all_attempts) done.insert(key_of(a));
  AppenderPool appenders;

  // Stage 1: model attempts, one batch per model, models in parallel.
  {
    std::vector<ModelProfile> profiles = cfg.models;
    for (auto& p : profiles) p.seed_base += cfg.rng_seed;
    FailureLog failures;
    std::atomic<std::size_t> made{0};
    std::size_t requested = 0;
    struct Pending {
      const EvalItem* item;
      PromptMode mode;
      int run;
    };
    std::vector<std::vector<BatchRequest>> requests(profiles.size());
    std::vector<std::vector<Pending>> pending(profiles.size());
    for (std::size_t mi = 0; mi < profiles.size(); ++mi) {
      const auto& p = profiles[mi];
      for (const auto& task : ds.tasks) {
        for (const auto mode : task.prompting_modes) {
          for (int k = 1; k <= cfg.runs_per_item; ++k) {
            for (const auto& item : ds.items) {
              if (item.task_id != task.task_id) continue;
              if (done.contains(AttemptKey{p.name, task.task_id, mode, k, item.item_id})) {
                ++summary.attempts_reused;
                continue;
              }
              PromptBundle bundle;
              try {
                bundle = build_prompt(item, mode, templates, task.subtask);
              } catch (const PromptError& e) {
                throw RunError(fmt::format("stage prompting: item {}: {}", item.item_id, e.what()));
              }
              requests[mi].push_back({fmt::format("{}/{}/{}/run{}/{}", p.name, task.task_id, to_string(mode), k,
                                                  item.item_id),
                                      std::move(bundle.messages), derive_seed(p.seed_base, item.item_id, k, mode)});
              pending[mi].push_back({&item, mode, k});
            }
          }
        }
      }
      requested += requests[mi].size();
    }
    std::vector<std::exception_ptr> errors(profiles.size());
    {
      std::vector<std::jthread> threads;
      for (std::size_t mi = 0; mi < profiles.size(); ++mi) {
        if (requests[mi].empty()) continue;
        threads.emplace_back([&, mi] {
          const auto& p = profiles[mi];
          try {
            gateway.run_batch(p, requests[mi], p.max_concurrency, [&](std::size_t i, const BatchResult& r) {
              const auto& pend = pending[mi][i];
              if (!r.ok()) {
                failures.add(fmt::format("attempt {} failed after {} tries: {}", r.request_id,
                                         r.error().attempts(), r.error().what()));
                return;
              }
              auto a = make_attempt(*pend.item, p.name, pend.mode, pend.run, requests[mi][i].seed, r.completion());
              appenders.get(attempt_file(out, p.name, pend.item->task_id, pend.mode, pend.run)).append(to_json(a));
              ++made;
              std::lock_guard lock(collect_mutex);
              all_attempts.push_back(std::move(a));
            });
          } catch (...) {
            errors[mi] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    summary.attempts_made = made.load();
    if (failures.count > 0) {
      throw RunError(fmt::format("stage attempts: {} of {} requests failed, {} attempts persisted ({} reused); first "
                                 "error: {}",
                                 failures.count, requested, summary.attempts_made, summary.attempts_reused,
                                 failures.first));
    }
  }

  // Stage 2: judging.
  std::vector<json> all_judgments = existing.judgments;
  {
    std::set<std::string> judged;
    for (const auto& j : all_judgments) judged.insert(j.at("id").get<std::string>());
    std::map<AttemptKey, const Attempt*> index;
    for (const auto& a : all_attempts) index.emplace(key_of(a), &a);

    ModelProfile judge = cfg.judge;
    judge.seed_base += cfg.rng_seed;
    const Rubric rubric = Rubric::standard();
    struct Job {
      std::string id;
      std::string task_id;
      std::function<json()> run;
    };
    std::vector<Job> jobs;
    for (const auto& task : ds.tasks) {
      if (task.scoring_method == ScoringMethod::accuracy) continue;
      for (int k = 1; k <= cfg.runs_per_item; ++k) {
        for (const auto& item : ds.items) {
          if (item.task_id != task.task_id) continue;
          const auto base = json{{"task_id", task.task_id}, {"item_id", item.item_id}, {"run_index", k}};
          auto add = [&](std::string id, std::function<json()> fn) {
            if (judged.contains(id)) {
              ++summary.judgments_reused;
              return;
            }
            jobs.push_back({std::move(id), task.task_id, std::move(fn)});
          };
          switch (task.scoring_method) {
            case ScoringMethod::judge_pairwise:
              for (std::size_t i = 0; i < cfg.models.size(); ++i) {
                for (std::size_t j = i + 1; j < cfg.models.size(); ++j) {
                  const auto& a = cfg.models[i].name;
                  const auto& b = cfg.models[j].name;
                  auto id = pairwise_id(task.task_id, item.item_id, k, a, b);
                  const auto ans_a = judgeable(answer_text(index, a, task.task_id, k, item.item_id));
                  const auto ans_b = judgeable(answer_text(index, b, task.task_id, k, item.item_id));
                  add(id, [&, id, base, a, b, ans_a, ans_b, question = item.prompt] {
                    const auto s = judge_pair_swapped(gateway, judge, id, question, ans_a, ans_b, rubric, templates);
                    const auto sc = pair_scores(s.ab, s.ba);
                    const auto o = resolve_pair(sc, cfg.winner_threshold);
                    json rec = base;
                    rec.update(json{{"id", id},
                                    {"kind", "pairwise"},
                                    {"model_a", a},
                                    {"model_b", b},
                                    {"a_round1", sc.a_round1},
                                    {"b_round1", sc.b_round1},
                                    {"a_round2", sc.a_round2},
                                    {"b_round2", sc.b_round2},
                                    {"threshold", cfg.winner_threshold},
                                    {"winner", to_string(o.winner)},
                                    {"consistent", o.consistent},
                                    {"ab", verdict_json(s.ab, s.prompt_ab)},
                                    {"ba", verdict_json(s.ba, s.prompt_ba)}});
                    return rec;
                  });
                }
              }
              break;
            case ScoringMethod::judge_absolute:
              for (const auto& p : cfg.models) {
                auto id = absolute_id(task.task_id, item.item_id, k, p.name);
                const auto ans = judgeable(answer_text(index, p.name, task.task_id, k, item.item_id));
                add(id, [&, id, base, name = p.name, ans, question = item.prompt] {
                  const auto r = judge_absolute(gateway, judge, id, question, ans, rubric, templates);
                  json rec = base;
                  rec.update(json{{"id", id},
                                  {"kind", "absolute"},
                                  {"model", name},
                                  {"total", r.verdict.total},
                                  {"scale_max", rubric.scale_max},
                                  {"per_dimension", r.verdict.per_dimension},
                                  {"clamped", r.verdict.clamped},
                                  {"rationale", r.verdict.rationale},
                                  {"raw_judge_output", r.verdict.raw_judge_output},
                                  {"prompt", messages_json(r.prompt)}});
                  return rec;
                });
              }
              break;
            case ScoringMethod::non_negative_ratio:
              for (const auto& p : cfg.models) {
                if (cfg.baseline_model && p.name == *cfg.baseline_model) continue;
                auto id = baseline_id(task.task_id, item.item_id, k, p.name);
                const auto ans = judgeable(answer_text(index, p.name, task.task_id, k, item.item_id));
                add(id, [&, id, base, name = p.name, ans, question = item.prompt,
                         reference = judgeable(item.baseline_answer.value_or(""))] {
                  const auto s = judge_pair_swapped(gateway, judge, id, question, ans, reference, rubric, templates);
                  const auto sc = pair_scores(s.ab, s.ba);
                  const auto o = resolve_pair(sc, cfg.winner_threshold);
                  json rec = base;
                  rec.update(json{{"id", id},
                                  {"kind", "baseline"},
                                  {"model_a", name},
                                  {"model_b", nullptr},
                                  {"a_round1", sc.a_round1},
                                  {"b_round1", sc.b_round1},
                                  {"a_round2", sc.a_round2},
                                  {"b_round2", sc.b_round2},
                                  {"threshold", cfg.winner_threshold},
                                  {"winner", to_string(o.winner)},
                                  {"consistent", o.consistent},
                                  {"ab", verdict_json(s.ab, s.prompt_ab)},
                                  {"ba", verdict_json(s.ba, s.prompt_ba)}});
                  return rec;
                });
              }
              break;
            case ScoringMethod::accuracy: break;
          }
        }
      }
    }
    FailureLog failures;
    std::atomic<std::size_t> made{0};
    parallel_for(jobs.size(), judge.max_concurrency, [&](std::size_t i) {
      const auto& job = jobs[i];
      try {
        auto rec = job.run();
        appenders.get(out / "judgments" / (sanitize_component(job.task_id) + ".jsonl")).append(rec);
        ++made;
        std::lock_guard lock(collect_mutex);
        all_judgments.push_back(std::move(rec));
      } catch (const std::exception& e) {
        failures.add(fmt::format("judgment {} failed: {}", job.id, e.what()));
      }
    });
    summary.judgments_made = made.load();
    if (failures.count > 0) {
      throw RunError(fmt::format("stage judging: {} of {} judgments failed, {} persisted ({} reused); first error: {}",
                                 failures.count, jobs.size(), summary.judgments_made, summary.judgments_reused,
                                 failures.first));
    }
  }

  // Stage 3: scoring and artifacts.
  try {
    summary.leaderboard = compute_leaderboard(manifest, all_attempts, all_judgments);
  } catch (const Error& e) {
    throw RunError(std::string("stage scoring: ") + e.what());
  }
  write_bias_artifacts(out / "bias", all_judgments);
  for (auto f : {OutputFormat::markdown, OutputFormat::csv, OutputFormat::json}) {
    write_text_file(out / fmt::format("leaderboard.{}", file_extension(f)), emit(summary.leaderboard, f));
  }
  summary.wire_attempts = gateway.wire_attempts() - wire_start;
  return summary;
}

}  // namespace ameval
