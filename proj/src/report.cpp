// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace ameval {

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::markdown: return "markdown";
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
  }
  return "?";
}

OutputFormat parse_output_format(std::string_view s) {
  if (s == "markdown" || s == "md") return OutputFormat::markdown;
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw Error("unknown output format \"" + std::string(s) + "\"");
}

std::string_view file_extension(OutputFormat f) {
  switch (f) {
    case OutputFormat::markdown: return "md";
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
  }
  return "txt";
}

const std::optional<LeaderboardCell>& Leaderboard::at(std::string_view model, std::string_view task) const {
  const auto r = std::find(models.begin(), models.end(), model);
  const auto c = std::find(tasks.begin(), tasks.end(), task);
  if (r == models.end() || c == tasks.end()) {
    throw Error(fmt::format("leaderboard has no cell ({}, {})", model, task));
  }
  return cells[static_cast<std::size_t>(r - models.begin())][static_cast<std::size_t>(c - tasks.begin())];
}

LeaderboardEntry entry_from(const TaskScore& s) {
  return {s.model_name, s.task_id, s.mean, s.n_runs, s.stddev, std::string(to_string(s.mode))};
}

Leaderboard build_leaderboard(std::span<const LeaderboardEntry> entries, std::vector<std::string> models,
                              std::vector<std::string> tasks) {
  const bool derive_rows = models.empty();
  const bool derive_cols = tasks.empty();
  for (const auto& e : entries) {
    if (derive_rows && std::find(models.begin(), models.end(), e.model) == models.end()) models.push_back(e.model);
    if (derive_cols && std::find(tasks.begin(), tasks.end(), e.task) == tasks.end()) tasks.push_back(e.task);
  }
  Leaderboard board;
  board.models = std::move(models);
  board.tasks = std::move(tasks);
  board.cells.assign(board.models.size(), std::vector<std::optional<LeaderboardCell>>(board.tasks.size()));
  for (const auto& e : entries) {
    const auto r = std::find(board.models.begin(), board.models.end(), e.model);
    const auto c = std::find(board.tasks.begin(), board.tasks.end(), e.task);
    if (r == board.models.end()) throw Error("leaderboard: model \"" + e.model + "\" is not a row");
    if (c == board.tasks.end()) throw Error("leaderboard: task \"" + e.task + "\" is not a column");
    if (!(e.score >= 0.0 && e.score <= 1.0)) {
      throw Error(fmt::format("leaderboard: score {} for ({}, {}) is outside [0, 1]", e.score, e.model, e.task));
    }
    auto& cell = board.cells[static_cast<std::size_t>(r - board.models.begin())]
                            [static_cast<std::size_t>(c - board.tasks.begin())];
    if (cell) throw Error("leaderboard: duplicate entry for (" + e.model + ", " + e.task + ")");
    cell = LeaderboardCell{e.score, e.n_runs, e.stddev, e.mode_provenance, false};
  }
  for (std::size_t c = 0; c < board.tasks.size(); ++c) {
    std::optional<double> best;
    for (const auto& row : board.cells) {
      if (row[c] && (!best || row[c]->score > *best)) best = row[c]->score;
    }
    for (auto& row : board.cells) {
      if (row[c] && row[c]->score == *best) row[c]->best = true;
    }
  }
  return board;
}

std::string display_score(double score) { return fmt::format("{:.1f}", score * 100.0); }

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string md_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out.push_back(' ');
    else out.push_back(c);
  }
  return out;
}

}  // namespace

std::string emit(const Leaderboard& board, OutputFormat format) {
  std::string out;
  switch (format) {
    case OutputFormat::markdown: {
      out = "| Model |";
      for (const auto& t : board.tasks) out += " " + md_field(t) + " |";
      out += "\n|---|";
      for (std::size_t c = 0; c < board.tasks.size(); ++c) out += "---:|";
      out += "\n";
      for (std::size_t r = 0; r < board.models.size(); ++r) {
        out += "| " + md_field(board.models[r]) + " |";
        for (const auto& cell : board.cells[r]) {
          if (!cell) {
            out += " - |";
          } else if (cell->best) {
            out += " **" + display_score(cell->score) + "** |";
          } else {
            out += " " + display_score(cell->score) + " |";
          }
        }
        out += "\n";
      }
      break;
    }
    case OutputFormat::csv: {
      out = "model";
      for (const auto& t : board.tasks) out += "," + csv_field(t);
      out += "\n";
      for (std::size_t r = 0; r < board.models.size(); ++r) {
        out += csv_field(board.models[r]);
        for (const auto& cell : board.cells[r]) {
          out += ",";
          if (cell) out += display_score(cell->score);
        }
        out += "\n";
      }
      break;
    }
    case OutputFormat::json: {
      json cells = json::array();
      for (std::size_t r = 0; r < board.models.size(); ++r) {
        for (std::size_t c = 0; c < board.tasks.size(); ++c) {
          const auto& cell = board.cells[r][c];
          json j{{"model", board.models[r]}, {"task", board.tasks[c]}, {"absent", !cell.has_value()}};
          if (cell) {
            j["score"] = cell->score;
            j["display"] = display_score(cell->score);
            j["n_runs"] = cell->n_runs;
            j["stddev"] = cell->stddev;
            j["mode"] = cell->mode_provenance;
            j["best"] = cell->best;
          }
          cells.push_back(std::move(j));
        }
      }
      json doc{{"models", board.models}, {"tasks", board.tasks}, {"cells", cells}, {"metadata", board.metadata}};
      out = doc.dump(2) + "\n";
      break;
    }
  }
  return out;
}

std::string emit(std::span<const ConsistencyPoint> curve, OutputFormat format) {
  switch (format) {
    case OutputFormat::csv: return consistency_curve_csv(curve);
    case OutputFormat::markdown: {
      std::string out = "| threshold | consistency | n_pairs |\n|---:|---:|---:|\n";
      for (const auto& p : curve) out += fmt::format("| {} | {:.4f} | {} |\n", p.threshold, p.consistency, p.n_pairs);
      return out;
    }
    case OutputFormat::json: {
      json arr = json::array();
      for (const auto& p : curve) {
        arr.push_back({{"threshold", p.threshold}, {"consistency", p.consistency}, {"n_pairs", p.n_pairs}});
      }
      return arr.dump(2) + "\n";
    }
  }
  return {};
}

Leaderboard leaderboard_from_json(const json& doc) {
  std::vector<LeaderboardEntry> entries;
  for (const auto& c : doc.at("cells")) {
    if (c.value("absent", false)) continue;
    entries.push_back({c.at("model").get<std::string>(), c.at("task").get<std::string>(),
                       c.at("score").get<double>(), c.value("n_runs", 1), c.value("stddev", 0.0),
                       c.value("mode", std::string())});
  }
  auto board = build_leaderboard(entries, doc.at("models").get<std::vector<std::string>>(),
                                 doc.at("tasks").get<std::vector<std::string>>());
  board.metadata = doc.value("metadata", json::object());
  return board;
}

}  // namespace ameval
