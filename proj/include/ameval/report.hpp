// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Leaderboard assembly and deterministic emission as markdown, CSV or JSON.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/bias.hpp"
#include "ameval/scoring.hpp"

namespace ameval {

enum class OutputFormat { markdown, csv, json };
std::string_view to_string(OutputFormat f);
OutputFormat parse_output_format(std::string_view s);
std::string_view file_extension(OutputFormat f);

struct LeaderboardEntry {
  std::string model;
  std::string task;
  double score = 0.0;  // in [0, 1]
  int n_runs = 1;
  double stddev = 0.0;
  std::string mode_provenance;  // e.g. "AOT", "COT", "PLAIN"
};

struct LeaderboardCell {
  double score = 0.0;
  int n_runs = 1;
  double stddev = 0.0;
  std::string mode_provenance;
  bool best = false;  // ties for the column maximum
};

struct Leaderboard {
  std::vector<std::string> models;  // rows
  std::vector<std::string> tasks;   // columns
  std::vector<std::vector<std::optional<LeaderboardCell>>> cells;  // [row][column]
  json metadata = json::object();

  const std::optional<LeaderboardCell>& at(std::string_view model, std::string_view task) const;
};

/// Rows and columns follow `models` and `tasks` when given, otherwise the
/// order of first appearance. Pairs with no entry are absent. Throws on a
/// duplicate (model, task), a score outside [0, 1], or an entry naming a row
/// or column not listed.
Leaderboard build_leaderboard(std::span<const LeaderboardEntry> entries,
                              std::vector<std::string> models = {}, std::vector<std::string> tasks = {});

LeaderboardEntry entry_from(const TaskScore& s);

/// Score as shown in tables: x100, one decimal.
std::string display_score(double score);

/// Markdown bolds column maxima and writes "-" for absent cells. CSV leaves
/// absent cells empty. JSON carries every cell field plus the metadata.
std::string emit(const Leaderboard& board, OutputFormat format);
std::string emit(std::span<const ConsistencyPoint> curve, OutputFormat format);

Leaderboard leaderboard_from_json(const json& doc);

}  // namespace ameval
