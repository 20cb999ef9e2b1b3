// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2e_oracle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"

namespace ameval::oracle {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

// Label each fixture response should extract to, read off by hand.
std::optional<std::set<std::string>> expected_label(const std::string& response) {
  static const std::map<std::string, std::optional<std::string>> table{
      {"A", "A"},
      {"B", "B"},
      {"C", "C"},
      {"D", "D"},
      {"(C)", "C"},
      {"The defining feature matches the first option.\nAnswer: A", "A"},
      {"Weighing each option in turn.\nAnswer: B", "B"},
      {"Answer: A", "A"},
      {"After elimination the last option remains.\nAnswer: D", "D"},
      {"Answer: C", "C"},
      {"Considering the options.\nAnswer: A", "A"},
      {"I am not sure.", std::nullopt},
  };
  const auto it = table.find(response);
  if (it == table.end()) throw std::runtime_error("no hand label for response: " + response);
  if (!it->second) return std::nullopt;
  return std::set<std::string>{*it->second};
}

std::vector<std::string> rule_responses(const json& script, const std::string& mode) {
  const std::string marker = mode == "AOT"   ? "Respond with the option letter only"
                             : mode == "COT" ? "Reason step by step"
                                             : "";
  for (const auto& rule : script.at("rules")) {
    const bool hit = marker.empty() ? rule.value("any", false) : rule.value("contains", std::string()) == marker;
    if (hit) return rule.at("responses").get<std::vector<std::string>>();
  }
  throw std::runtime_error("no rule for mode " + mode);
}

std::string pick(const json& script, const std::string& mode, std::int64_t seed) {
  const auto rs = rule_responses(script, mode);
  return rs[static_cast<std::size_t>(seed % static_cast<std::int64_t>(rs.size()))];
}

double length_score(const std::string& answer, int divisor) {
  const std::string shown = answer.empty() ? "(no answer)" : answer;
  return std::min(10.0, std::floor(static_cast<double>(shown.size()) / divisor));
}

}  // namespace

E2eExpectation e2e_expectation(const fs::path& dir) {
  const auto run = read_json(dir / "run.json");
  const auto judge = read_json(dir / (run["judge"]["base_url"].get<std::string>().substr(5)));
  const int divisor = judge.value("length_divisor", 20);
  const int runs = run.at("runs_per_item").get<int>();
  const double threshold = run.at("winner_threshold").get<double>();
  const std::int64_t rng_seed = run.at("rng_seed").get<std::int64_t>();

  struct Task {
    std::string id;
    std::string scoring;
    std::vector<std::string> modes;
  };
  struct Item {
    std::string id;
    std::string task;
    std::set<std::string> gold;
  };
  std::vector<Task> tasks;
  std::vector<Item> items;
  {
    std::ifstream in(dir / run.at("dataset_path").get<std::string>());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      if (j.at("kind") == "task") {
        tasks.push_back({j.at("task_id"), j.at("scoring_method"), j.at("prompting_modes")});
      } else {
        Item it{j.at("item_id"), j.at("task_id"), {}};
        if (j.contains("gold")) {
          for (const auto& g : j["gold"]) it.gold.insert(g.get<std::string>());
        }
        items.push_back(std::move(it));
      }
    }
  }

  struct Model {
    std::string name;
    std::int64_t seed_base;
    json script;
  };
  std::vector<Model> models;
  for (const auto& m : run.at("models")) {
    models.push_back({m.at("name"), m.value("seed_base", std::int64_t{0}) + rng_seed,
                      read_json(dir / m.at("base_url").get<std::string>().substr(5))});
  }

  E2eExpectation out;
  for (const auto& task : tasks) {
    if (task.scoring == "accuracy") {
      for (const auto& m : models) {
        std::optional<double> best;
        for (const auto& mode : task.modes) {
          double sum = 0.0;
          for (int k = 1; k <= runs; ++k) {
            int hits = 0, n = 0;
            for (const auto& it : items) {
              if (it.task != task.id) continue;
              ++n;
              ++out.attempts;
              const auto label = expected_label(pick(m.script, mode, derive_seed(m.seed_base, it.id, k, mode)));
              if (label && *label == it.gold) ++hits;
            }
            sum += static_cast<double>(hits) / n;
          }
          const double mean = sum / runs;
          out.mode_means[{m.name, task.id + "/" + mode}] = mean;
          // A later mode replaces the earlier one only when strictly better.
          if (!best || mean > *best) best = mean;
        }
        out.cells[{m.name, task.id}] = *best;
      }
    } else if (task.scoring == "judge_pairwise") {
      std::map<std::string, double> points;
      std::map<std::string, int> games;
      for (int k = 1; k <= runs; ++k) {
        for (const auto& it : items) {
          if (it.task != task.id) continue;
          std::vector<double> s;
          for (const auto& m : models) {
            ++out.attempts;
            s.push_back(length_score(pick(m.script, "PLAIN", derive_seed(m.seed_base, it.id, k, "PLAIN")), divisor));
          }
          for (std::size_t i = 0; i < models.size(); ++i) {
            for (std::size_t j = i + 1; j < models.size(); ++j) {
              ++out.judgments;
              // Both presentation orders give the same totals: the judge has no position bonus.
              const int r1 = winner(s[i], s[j], threshold);
              const int r2 = winner(s[i], s[j], threshold);
              const int w = r1 == r2 ? r1 : 0;
              const double pi = w > 0 ? 1.0 : w < 0 ? 0.0 : 0.5;
              points[models[i].name] += pi;
              points[models[j].name] += 1.0 - pi;
              ++games[models[i].name];
              ++games[models[j].name];
            }
          }
        }
      }
      for (const auto& m : models) out.cells[{m.name, task.id}] = points[m.name] / games[m.name];
    } else {
      throw std::runtime_error("e2e oracle does not model scoring " + task.scoring);
    }
  }
  return out;
}

}  // namespace ameval::oracle
