// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Data model shared by every stage: the task taxonomy, evaluation items,
// model endpoints and run configuration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/util.hpp"

namespace ameval {

enum class Category { exam, open_qa, scenario, safety };
enum class ScoringMethod { accuracy, judge_pairwise, judge_absolute, non_negative_ratio };
enum class PromptMode { AOT, COT, PLAIN };

std::string_view to_string(Category c);
std::string_view to_string(ScoringMethod m);
std::string_view to_string(PromptMode m);
Category parse_category(std::string_view s);
ScoringMethod parse_scoring_method(std::string_view s);
PromptMode parse_prompt_mode(std::string_view s);

/// Multiple-choice answer labels ('A', 'B', ...).
using LabelSet = std::set<char>;

std::string format_labels(const LabelSet& labels);  // "A,C"

struct TaskSpec {
  std::string task_id;
  Category category = Category::exam;
  std::string subtask;
  ScoringMethod scoring_method = ScoringMethod::accuracy;
  std::vector<PromptMode> prompting_modes;

  bool has_mode(PromptMode m) const;
  bool operator==(const TaskSpec&) const = default;
};

struct Choice {
  char label = 'A';
  std::string text;
  bool operator==(const Choice&) const = default;
};

struct EvalItem {
  std::string item_id;
  std::string task_id;
  std::string prompt;
  std::vector<Choice> choices;  // empty for open-form items
  std::optional<LabelSet> gold_labels;
  std::optional<std::string> gold_text;
  std::optional<std::string> reference_material;
  std::optional<std::string> baseline_answer;

  bool is_mcq() const { return !choices.empty(); }
  LabelSet labels() const;
  bool operator==(const EvalItem&) const = default;
};

struct Dataset {
  std::vector<TaskSpec> tasks;
  std::vector<EvalItem> items;

  const TaskSpec* find_task(std::string_view task_id) const;
  bool operator==(const Dataset&) const = default;
};

class DatasetError : public Error {
 public:
  DatasetError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

json to_json(const TaskSpec& task);
json to_json(const EvalItem& item);
TaskSpec task_from_json(const json& record);
EvalItem item_from_json(const json& record);

/// Loads a line-delimited dataset of "task" and "item" records. Items may
/// appear before the task they reference; both are returned in file order.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view text);
std::string serialize_dataset(const Dataset& dataset);

struct TaxonomyEntry {
  Category category;
  std::string subtask;
  ScoringMethod scoring_method;
  std::vector<PromptMode> default_modes;
};

/// The 24 built-in sub-tasks with their default scoring methods.
const std::vector<TaxonomyEntry>& taxonomy();
const TaxonomyEntry* find_subtask(std::string_view subtask);

class ModelBackend;

struct ModelProfile {
  std::string name;
  std::string base_url;       // http(s)://... or mock:<script path>
  std::string auth_env_var;   // environment variable holding the bearer token
  double temperature = 0.2;
  int max_tokens = 1024;
  int max_concurrency = 4;
  int requests_per_minute = 600;
  std::int64_t seed_base = 0;
  int timeout_ms = 120000;
  // Set for in-process mocks; null routes through base_url.
  std::shared_ptr<ModelBackend> backend;
};

ModelProfile profile_from_json(const json& record, const std::filesystem::path& base_dir,
                               double default_temperature);
json to_json(const ModelProfile& profile);

struct RunConfig {
  std::filesystem::path dataset_path;
  std::vector<ModelProfile> models;
  ModelProfile judge;
  int runs_per_item = 5;
  double winner_threshold = 1.0;
  std::filesystem::path output_dir;
  std::int64_t rng_seed = 0;
  // Model whose non_negative_ratio cells are reported absent (it is the
  // reference the ratio is taken against).
  std::optional<std::string> baseline_model;

  bool self_judging() const;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Relative paths in the file are resolved against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir);

}  // namespace ameval
