// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end evaluation runs: attempts, judging, scoring and the persisted
// run directory that `report` replays.
//
// Run directory layout:
//   manifest.json                 effective configuration and dataset
//   attempts/<model>__<task>__<mode>__run<k>.jsonl
//   judgments/<task>.jsonl        judge transcripts and per-round totals
//   bias/consistency_curve.csv, bias/position_bias.json
//   leaderboard.md, leaderboard.csv, leaderboard.json

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ameval/core.hpp"
#include "ameval/gateway.hpp"
#include "ameval/judge.hpp"
#include "ameval/prompt.hpp"
#include "ameval/report.hpp"
#include "ameval/scoring.hpp"

namespace ameval {

struct RunOptions {
  std::vector<std::string> models;  // empty keeps every configured model
  std::vector<std::string> tasks;   // empty keeps every task in the dataset
  std::optional<double> threshold;
  std::optional<std::int64_t> seed;
  bool resume = false;
  const TemplateSet* templates = nullptr;  // defaults when null
};

/// Everything scoring needs, as persisted in manifest.json.
struct RunManifest {
  Dataset dataset;  // already restricted to the selected tasks
  std::vector<std::string> models;
  std::string judge;
  int runs_per_item = 5;
  double winner_threshold = 1.0;
  std::int64_t rng_seed = 0;
  std::optional<std::string> baseline_model;
  bool self_judging = false;
};

json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& doc);

class RunError : public Error {
 public:
  using Error::Error;
};

struct RunSummary {
  Leaderboard leaderboard;
  std::size_t attempts_made = 0;
  std::size_t attempts_reused = 0;
  std::size_t judgments_made = 0;
  std::size_t judgments_reused = 0;
  std::uint64_t wire_attempts = 0;  // gateway wire attempts during this run
};

/// Throws RunError naming the failed stage and how much progress was
/// persisted; a later run with `resume` picks up from there.
RunSummary run_eval(const RunConfig& config, const RunOptions& options, Gateway& gateway);

/// Pure scoring over persisted records. Judgment records are the JSON
/// objects written to judgments/.
Leaderboard compute_leaderboard(const RunManifest& manifest, std::span<const Attempt> attempts,
                                std::span<const json> judgments);

struct RunRecords {
  RunManifest manifest;
  std::vector<Attempt> attempts;
  std::vector<json> judgments;
};

/// Loads manifest, attempts and judgments from a run directory.
RunRecords load_run(const std::filesystem::path& run_dir);

/// Recomputes the leaderboard from a run directory.
Leaderboard rebuild_leaderboard(const std::filesystem::path& run_dir);

/// Per-round totals from every pairwise and baseline judgment.
std::vector<PairScores> judged_pair_scores(std::span<const json> judgments);

std::filesystem::path attempt_file(const std::filesystem::path& run_dir, std::string_view model,
                                   std::string_view task, PromptMode mode, int run_index);

}  // namespace ameval
