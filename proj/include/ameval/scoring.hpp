// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Objective scoring: answer extraction, accuracy, run averaging, AOT/COT
// aggregation and the non-negative ratio against a baseline.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ameval/core.hpp"
#include "ameval/gateway.hpp"

namespace ameval {

struct Attempt {
  std::string item_id;
  std::string model_name;
  std::string task_id;
  PromptMode mode = PromptMode::AOT;
  int run_index = 1;
  std::string raw_output;
  std::optional<LabelSet> extracted;
  std::optional<bool> correct;  // set iff gold exists and extraction succeeded
  std::int64_t seed = 0;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
  FinishReason finish_reason = FinishReason::stop;
};

json to_json(const Attempt& a);
Attempt attempt_from_json(const json& j);

/// Builds the attempt record for a completion, extracting an answer when the
/// item is multiple-choice.
Attempt make_attempt(const EvalItem& item, const std::string& model_name, PromptMode mode,
                     int run_index, std::int64_t seed, const Completion& completion);

/// Tries, in order: an "Answer: X[,Y]" line (the last one wins); a lone
/// label letter opening the output; the unique label letter standing alone
/// in the first line. Returns nullopt if nothing fires or the result is not
/// a subset of `labels`.
std::optional<LabelSet> extract_choice(std::string_view raw_output, const LabelSet& labels);

using GoldMap = std::map<std::string, LabelSet, std::less<>>;

/// Fraction of attempts whose extracted set equals the gold set exactly.
/// Attempts with no extraction count as wrong. All attempts must share one
/// (model, task, mode, run) key.
double score_accuracy(std::span<const Attempt> attempts, const GoldMap& gold);

struct RunStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

RunStats average_runs(std::span<const double> per_run_scores);

struct TaskScore {
  std::string model_name;
  std::string task_id;
  PromptMode mode = PromptMode::AOT;  // which mode produced the value
  double mean = 0.0;
  double stddev = 0.0;
  int n_runs = 0;
  int n_items = 0;
};

/// Keeps whichever mode scored higher; on equal means the first argument wins.
TaskScore aggregate_modes(const TaskScore& aot, const TaskScore& cot);

enum class PairVerdict { win, tie, loss };
std::string_view to_string(PairVerdict v);

/// (# win + # tie) / total.
double score_non_negative_ratio(std::span<const PairVerdict> verdicts);

}  // namespace ameval
