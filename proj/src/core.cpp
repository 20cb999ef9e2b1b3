// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/core.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ameval {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::exam: return "exam";
    case Category::open_qa: return "open_qa";
    case Category::scenario: return "scenario";
    case Category::safety: return "safety";
  }
  return "?";
}

std::string_view to_string(ScoringMethod m) {
  switch (m) {
    case ScoringMethod::accuracy: return "accuracy";
    case ScoringMethod::judge_pairwise: return "judge_pairwise";
    case ScoringMethod::judge_absolute: return "judge_absolute";
    case ScoringMethod::non_negative_ratio: return "non_negative_ratio";
  }
  return "?";
}

std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::AOT: return "AOT";
    case PromptMode::COT: return "COT";
    case PromptMode::PLAIN: return "PLAIN";
  }
  return "?";
}

Category parse_category(std::string_view s) {
  for (auto c : {Category::exam, Category::open_qa, Category::scenario, Category::safety}) {
    if (to_string(c) == s) return c;
  }
  throw Error("unknown category \"" + std::string(s) + "\"");
}

ScoringMethod parse_scoring_method(std::string_view s) {
  for (auto m : {ScoringMethod::accuracy, ScoringMethod::judge_pairwise,
                 ScoringMethod::judge_absolute, ScoringMethod::non_negative_ratio}) {
    if (to_string(m) == s) return m;
  }
  throw Error("unknown scoring_method \"" + std::string(s) + "\"");
}

PromptMode parse_prompt_mode(std::string_view s) {
  for (auto m : {PromptMode::AOT, PromptMode::COT, PromptMode::PLAIN}) {
    if (to_string(m) == s) return m;
  }
  throw Error("unknown prompting mode \"" + std::string(s) + "\"");
}

std::string format_labels(const LabelSet& labels) {
  std::string out;
  for (char c : labels) {
    if (!out.empty()) out.push_back(',');
    out.push_back(c);
  }
  return out;
}

bool TaskSpec::has_mode(PromptMode m) const {
  return std::find(prompting_modes.begin(), prompting_modes.end(), m) != prompting_modes.end();
}

LabelSet EvalItem::labels() const {
  LabelSet out;
  for (const auto& c : choices) out.insert(c.label);
  return out;
}

const TaskSpec* Dataset::find_task(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

DatasetError::DatasetError(std::size_t line, const std::string& message)
    : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

// ---------------------------------------------------------------------------
// Taxonomy

const std::vector<TaxonomyEntry>& taxonomy() {
  using enum Category;
  using enum ScoringMethod;
  static const std::vector<PromptMode> exam_modes{PromptMode::AOT, PromptMode::COT};
  static const std::vector<PromptMode> answer_only{PromptMode::AOT};
  static const std::vector<PromptMode> plain{PromptMode::PLAIN};
  static const std::vector<TaxonomyEntry> entries{
      {exam, "Fund", accuracy, exam_modes},
      {exam, "Securities", accuracy, exam_modes},
      {exam, "Banking", accuracy, exam_modes},
      {exam, "Futures", accuracy, exam_modes},
      {exam, "CFA", accuracy, exam_modes},
      {open_qa, "Investment Research Q&A", judge_pairwise, plain},
      {open_qa, "Investment Advisory Q&A", judge_pairwise, plain},
      {open_qa, "Legal Regulation Q&A", judge_pairwise, plain},
      {open_qa, "Risk Management Q&A", judge_pairwise, plain},
      {open_qa, "Customer Service Q&A", judge_pairwise, plain},
      {scenario, "FMQ", accuracy, answer_only},
      {scenario, "FD-QA", accuracy, answer_only},
      {scenario, "FIA", accuracy, answer_only},
      {scenario, "CSA", accuracy, answer_only},
      {scenario, "NSA", accuracy, answer_only},
      {scenario, "EIE", judge_absolute, plain},
      {scenario, "FIE", judge_absolute, plain},
      {scenario, "IVE", judge_absolute, plain},
      {scenario, "FCER", judge_absolute, plain},
      {scenario, "NS", non_negative_ratio, plain},
      {scenario, "FNE", judge_absolute, plain},
      {safety, "General", accuracy, answer_only},
      {safety, "Economic", accuracy, answer_only},
      {safety, "Compliance", accuracy, answer_only},
  };
  return entries;
}

const TaxonomyEntry* find_subtask(std::string_view subtask) {
  for (const auto& e : taxonomy()) {
    if (e.subtask == subtask) return &e;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Records

namespace {

const json& require(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    throw Error(std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::optional<std::string> optional_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

char parse_label(const json& v) {
  const auto s = v.get<std::string>();
  if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z') {
    throw Error("choice label \"" + s + "\" is not a single capital letter");
  }
  return s[0];
}

}  // namespace

json to_json(const TaskSpec& task) {
  json modes = json::array();
  for (auto m : task.prompting_modes) modes.push_back(to_string(m));
  return json{{"kind", "task"},
              {"task_id", task.task_id},
              {"category", to_string(task.category)},
              {"subtask", task.subtask},
              {"scoring_method", to_string(task.scoring_method)},
              {"prompting_modes", modes}};
}

json to_json(const EvalItem& item) {
  json j{{"kind", "item"},
         {"item_id", item.item_id},
         {"task_id", item.task_id},
         {"prompt", item.prompt}};
  if (!item.choices.empty()) {
    json choices = json::array();
    for (const auto& c : item.choices) {
      choices.push_back({{"label", std::string(1, c.label)}, {"text", c.text}});
    }
    j["choices"] = choices;
  }
  if (item.gold_labels) {
    json gold = json::array();
    for (char c : *item.gold_labels) gold.push_back(std::string(1, c));
    j["gold"] = gold;
  } else if (item.gold_text) {
    j["gold"] = *item.gold_text;
  }
  if (item.reference_material) j["reference_material"] = *item.reference_material;
  if (item.baseline_answer) j["baseline_answer"] = *item.baseline_answer;
  return j;
}

TaskSpec task_from_json(const json& record) {
  TaskSpec t;
  t.task_id = require(record, "task_id").get<std::string>();
  t.category = parse_category(require(record, "category").get<std::string>());
  t.subtask = require(record, "subtask").get<std::string>();
  t.scoring_method = parse_scoring_method(require(record, "scoring_method").get<std::string>());
  for (const auto& m : require(record, "prompting_modes")) {
    const auto mode = parse_prompt_mode(m.get<std::string>());
    if (!t.has_mode(mode)) t.prompting_modes.push_back(mode);
  }
  return t;
}

EvalItem item_from_json(const json& record) {
  EvalItem item;
  item.item_id = require(record, "item_id").get<std::string>();
  item.task_id = require(record, "task_id").get<std::string>();
  item.prompt = require(record, "prompt").get<std::string>();
  if (auto it = record.find("choices"); it != record.end() && !it->is_null()) {
    for (const auto& c : *it) {
      item.choices.push_back({parse_label(require(c, "label")), require(c, "text").get<std::string>()});
    }
  }
  if (auto it = record.find("gold"); it != record.end() && !it->is_null()) {
    if (it->is_array()) {
      LabelSet gold;
      for (const auto& g : *it) gold.insert(parse_label(g));
      item.gold_labels = std::move(gold);
    } else {
      item.gold_text = it->get<std::string>();
    }
  }
  item.reference_material = optional_string(record, "reference_material");
  item.baseline_answer = optional_string(record, "baseline_answer");
  return item;
}

namespace {

void validate_task(const TaskSpec& t) {
  if (t.task_id.empty()) throw Error("empty task_id");
  const auto* entry = find_subtask(t.subtask);
  if (entry == nullptr) throw Error("unknown subtask \"" + t.subtask + "\"");
  if (entry->category != t.category) {
    throw Error("subtask \"" + t.subtask + "\" belongs to category " +
                std::string(to_string(entry->category)));
  }
  if (t.prompting_modes.empty()) throw Error("task \"" + t.task_id + "\" has no prompting modes");
  if (t.category == Category::exam &&
      (t.scoring_method != ScoringMethod::accuracy || !t.has_mode(PromptMode::AOT) ||
       !t.has_mode(PromptMode::COT))) {
    throw Error("exam task \"" + t.task_id + "\" must use accuracy with AOT and COT modes");
  }
  if (t.subtask == "NS" && t.scoring_method != ScoringMethod::non_negative_ratio) {
    throw Error("NS task \"" + t.task_id + "\" must use non_negative_ratio");
  }
  const bool objective = t.scoring_method == ScoringMethod::accuracy;
  for (auto m : t.prompting_modes) {
    if (objective == (m == PromptMode::PLAIN)) {
      throw Error("task \"" + t.task_id + "\": mode " + std::string(to_string(m)) +
                  " is incompatible with " + std::string(to_string(t.scoring_method)));
    }
  }
}

void validate_item(const EvalItem& item, const TaskSpec& task) {
  if (item.item_id.empty()) throw Error("empty item_id");
  if (trim(item.prompt).empty()) throw Error("item \"" + item.item_id + "\" has an empty prompt");
  for (std::size_t i = 0; i < item.choices.size(); ++i) {
    if (item.choices[i].label != static_cast<char>('A' + i)) {
      throw Error("item \"" + item.item_id + "\": non-consecutive labels");
    }
  }
  if (item.gold_labels) {
    if (!item.is_mcq()) throw Error("item \"" + item.item_id + "\": label gold without choices");
    if (item.gold_labels->empty()) throw Error("item \"" + item.item_id + "\": empty gold");
    const auto labels = item.labels();
    for (char g : *item.gold_labels) {
      if (!labels.contains(g)) {
        throw Error("item \"" + item.item_id + "\": gold label " + std::string(1, g) +
                    " is not a choice");
      }
    }
  } else if (item.is_mcq() && item.gold_text) {
    throw Error("item \"" + item.item_id + "\": multiple-choice gold must be a label list");
  }
  switch (task.scoring_method) {
    case ScoringMethod::accuracy:
      if (!item.is_mcq() || !item.gold_labels) {
        throw Error("item \"" + item.item_id + "\": accuracy tasks need choices and gold labels");
      }
      break;
    case ScoringMethod::non_negative_ratio:
      if (!item.baseline_answer || item.baseline_answer->empty()) {
        throw Error("item \"" + item.item_id + "\": non_negative_ratio items need baseline_answer");
      }
      [[fallthrough]];
    default:
      if (item.is_mcq()) {
        throw Error("item \"" + item.item_id + "\": judged tasks take open-form items");
      }
  }
}

}  // namespace

Dataset parse_dataset(std::string_view text) {
  struct Pending {
    EvalItem item;
    std::size_t line;
  };
  Dataset ds;
  std::vector<Pending> pending;
  std::unordered_set<std::string> subtasks;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json record = json::parse(line);
      const auto kind = require(record, "kind").get<std::string>();
      if (kind == "task") {
        auto task = task_from_json(record);
        validate_task(task);
        if (ds.find_task(task.task_id)) throw Error("duplicate task_id \"" + task.task_id + "\"");
        if (!subtasks.insert(task.subtask).second) {
          throw Error("duplicate subtask \"" + task.subtask + "\"");
        }
        ds.tasks.push_back(std::move(task));
      } else if (kind == "item") {
        pending.push_back({item_from_json(record), line_no});
      } else {
        throw Error("unknown record kind \"" + kind + "\"");
      }
    } catch (const DatasetError&) {
      throw;
    } catch (const json::exception& e) {
      throw DatasetError(line_no, std::string("malformed record: ") + e.what());
    } catch (const Error& e) {
      throw DatasetError(line_no, e.what());
    }
  }
  std::unordered_set<std::string> ids;
  for (auto& p : pending) {
    const auto* task = ds.find_task(p.item.task_id);
    if (task == nullptr) {
      throw DatasetError(p.line, "item \"" + p.item.item_id + "\" references unknown task \"" +
                                     p.item.task_id + "\"");
    }
    if (!ids.insert(p.item.item_id).second) {
      throw DatasetError(p.line, "duplicate item_id \"" + p.item.item_id + "\"");
    }
    try {
      validate_item(p.item, *task);
    } catch (const Error& e) {
      throw DatasetError(p.line, e.what());
    }
    ds.items.push_back(std::move(p.item));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  try {
    return parse_dataset(read_text_file(path));
  } catch (const DatasetError& e) {
    throw DatasetError(e.line(), path.string() + ": " + e.what());
  }
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& t : dataset.tasks) out += to_json(t).dump() + "\n";
  for (const auto& i : dataset.items) out += to_json(i).dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

template <typename T>
T get_or(const json& record, const char* key, T fallback) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

ModelProfile profile_from_json(const json& record, const std::filesystem::path& base_dir,
                               double default_temperature) {
  ModelProfile p;
  try {
    p.name = require(record, "name").get<std::string>();
    p.base_url = require(record, "base_url").get<std::string>();
  } catch (const Error& e) {
    throw ConfigError(std::string("model profile: ") + e.what());
  }
  if (p.base_url.starts_with("mock:")) {
    p.base_url = "mock:" + resolve(base_dir, p.base_url.substr(5)).string();
  }
  p.auth_env_var = get_or<std::string>(record, "auth_env_var", "");
  p.temperature = get_or(record, "temperature", default_temperature);
  p.max_tokens = get_or(record, "max_tokens", p.max_tokens);
  p.max_concurrency = get_or(record, "max_concurrency", p.max_concurrency);
  p.requests_per_minute = get_or(record, "requests_per_minute", p.requests_per_minute);
  p.seed_base = get_or<std::int64_t>(record, "seed_base", 0);
  p.timeout_ms = get_or(record, "timeout_ms", p.timeout_ms);
  if (p.name.empty()) throw ConfigError("model profile with empty name");
  if (p.temperature < 0) throw ConfigError("model \"" + p.name + "\": temperature must be >= 0");
  if (p.max_tokens < 1 || p.max_concurrency < 1 || p.requests_per_minute < 1 || p.timeout_ms < 1) {
    throw ConfigError("model \"" + p.name +
                      "\": max_tokens, max_concurrency, requests_per_minute and timeout_ms "
                      "must be positive");
  }
  return p;
}

json to_json(const ModelProfile& p) {
  return json{{"name", p.name},
              {"base_url", p.base_url},
              {"auth_env_var", p.auth_env_var},
              {"temperature", p.temperature},
              {"max_tokens", p.max_tokens},
              {"max_concurrency", p.max_concurrency},
              {"requests_per_minute", p.requests_per_minute},
              {"seed_base", p.seed_base},
              {"timeout_ms", p.timeout_ms}};
}

bool RunConfig::self_judging() const {
  return std::any_of(models.begin(), models.end(),
                     [&](const ModelProfile& m) { return m.name == judge.name; });
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be an object");
  for (const char* key : {"dataset_path", "models", "judge", "output_dir"}) {
    if (!doc.contains(key) || doc[key].is_null()) {
      throw ConfigError(std::string("missing required key \"") + key + "\"");
    }
  }
  RunConfig cfg;
  try {
    cfg.dataset_path = resolve(base_dir, doc["dataset_path"].get<std::string>());
    cfg.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
    cfg.runs_per_item = get_or(doc, "runs_per_item", 5);
    cfg.winner_threshold = get_or(doc, "winner_threshold", 1.0);
    cfg.rng_seed = get_or<std::int64_t>(doc, "rng_seed", 0);
    if (auto b = doc.find("baseline_model"); b != doc.end() && !b->is_null()) {
      cfg.baseline_model = b->get<std::string>();
    }
    if (!doc["models"].is_array() || doc["models"].empty()) {
      throw ConfigError("\"models\" must be a non-empty list");
    }
    for (const auto& m : doc["models"]) cfg.models.push_back(profile_from_json(m, base_dir, 0.2));
    cfg.judge = profile_from_json(doc["judge"], base_dir, 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (cfg.runs_per_item < 1) throw ConfigError("runs_per_item must be >= 1");
  if (cfg.winner_threshold < 0) throw ConfigError("winner_threshold must be >= 0");
  std::unordered_set<std::string> names;
  for (const auto& m : cfg.models) {
    if (!names.insert(m.name).second) throw ConfigError("duplicate model name \"" + m.name + "\"");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

}  // namespace ameval
