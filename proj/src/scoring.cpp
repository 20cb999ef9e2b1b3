// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace ameval {

json to_json(const Attempt& a) {
  json j{{"item_id", a.item_id},
         {"model_name", a.model_name},
         {"task_id", a.task_id},
         {"mode", to_string(a.mode)},
         {"run_index", a.run_index},
         {"raw_output", a.raw_output},
         {"extracted", nullptr},
         {"correct", nullptr},
         {"seed", a.seed},
         {"latency_ms", a.latency_ms},
         {"attempt_count", a.attempt_count},
         {"finish_reason", to_string(a.finish_reason)}};
  if (a.extracted) j["extracted"] = format_labels(*a.extracted);
  if (a.correct) j["correct"] = *a.correct;
  return j;
}

Attempt attempt_from_json(const json& j) {
  Attempt a;
  a.item_id = j.at("item_id").get<std::string>();
  a.model_name = j.at("model_name").get<std::string>();
  a.task_id = j.at("task_id").get<std::string>();
  a.mode = parse_prompt_mode(j.at("mode").get<std::string>());
  a.run_index = j.at("run_index").get<int>();
  a.raw_output = j.at("raw_output").get<std::string>();
  if (const auto& e = j.at("extracted"); !e.is_null()) {
    LabelSet s;
    for (char c : e.get<std::string>()) {
      if (c != ',') s.insert(c);
    }
    a.extracted = std::move(s);
  }
  if (const auto& c = j.at("correct"); !c.is_null()) a.correct = c.get<bool>();
  a.seed = j.value("seed", std::int64_t{0});
  a.latency_ms = j.value("latency_ms", std::int64_t{0});
  a.attempt_count = j.value("attempt_count", 1);
  a.finish_reason = parse_finish_reason(j.value("finish_reason", std::string("stop")));
  return a;
}

Attempt make_attempt(const EvalItem& item, const std::string& model_name, PromptMode mode,
                     int run_index, std::int64_t seed, const Completion& completion) {
  Attempt a;
  a.item_id = item.item_id;
  a.model_name = model_name;
  a.task_id = item.task_id;
  a.mode = mode;
  a.run_index = run_index;
  a.raw_output = completion.text;
  a.seed = seed;
  a.latency_ms = completion.latency_ms;
  a.attempt_count = completion.attempt_count;
  a.finish_reason = completion.finish_reason;
  if (item.is_mcq()) {
    a.extracted = extract_choice(completion.text, item.labels());
    if (item.gold_labels && a.extracted) a.correct = *a.extracted == *item.gold_labels;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }

// Letters after an "Answer:" marker on one line, or nullopt.
std::optional<LabelSet> answer_marker(std::string_view line) {
  static const std::regex marker(
      R"((?:[Aa]nswer|ANSWER|答案)\**\s*(?:is\s*)?(?::|：)[\s*]*\(?([A-Z](?:\s*(?:,|，|、|/|and|&)?\s*[A-Z])*)(?![A-Za-z]))");
  std::optional<LabelSet> found;
  const std::string s(line);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it) {
    LabelSet letters;
    for (char c : (*it)[1].str()) {
      if (c >= 'A' && c <= 'Z') letters.insert(c);
    }
    // "and" contributes no capitals, so only capitals are collected.
    found = std::move(letters);
  }
  return found;
}

bool is_terminator(std::string_view rest) {
  if (rest.empty()) return true;
  const unsigned char c = static_cast<unsigned char>(rest[0]);
  if (std::isspace(c) != 0) return true;
  if (std::string_view(".,:;)]、").find(static_cast<char>(c)) != std::string_view::npos) return true;
  for (std::string_view cjk : {"，", "。", "：", "；", "）", "．", "、"}) {
    if (rest.starts_with(cjk)) return true;
  }
  return false;
}

}  // namespace

std::optional<LabelSet> extract_choice(std::string_view raw, const LabelSet& labels) {
  if (labels.empty()) throw Error("extract_choice needs a non-empty label set");
  auto subset = [&](const LabelSet& s) -> std::optional<LabelSet> {
    if (s.empty()) return std::nullopt;
    for (char c : s) {
      if (!labels.contains(c)) return std::nullopt;
    }
    return s;
  };

  // Rule 1: explicit marker, last matching line wins.
  const auto lines = split_lines(raw);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (auto hit = answer_marker(*it)) return subset(*hit);
  }

  // Rule 2: a lone leading label letter.
  auto text = trim(raw);
  while (!text.empty() && (text.front() == '(' || text.front() == '*')) text.remove_prefix(1);
  if (!text.empty() && labels.contains(text.front()) && is_terminator(text.substr(1))) {
    return LabelSet{text.front()};
  }

  // Rule 3: the unique standalone label letter in the first line.
  const auto first = trim(raw).substr(0, trim(raw).find('\n'));
  LabelSet seen;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto c = static_cast<unsigned char>(first[i]);
    if (!labels.contains(static_cast<char>(c))) continue;
    const bool left_ok = i == 0 || !is_ascii_alnum(static_cast<unsigned char>(first[i - 1]));
    const bool right_ok = i + 1 == first.size() || !is_ascii_alnum(static_cast<unsigned char>(first[i + 1]));
    if (left_ok && right_ok) seen.insert(static_cast<char>(c));
  }
  if (seen.size() == 1) return seen;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

double score_accuracy(std::span<const Attempt> attempts, const GoldMap& gold) {
  if (attempts.empty()) throw Error("score_accuracy: empty attempt set");
  const auto& k = attempts.front();
  std::size_t hits = 0;
  for (const auto& a : attempts) {
    if (a.model_name != k.model_name || a.task_id != k.task_id || a.mode != k.mode ||
        a.run_index != k.run_index) {
      throw Error("score_accuracy: attempts span several (model, task, mode, run) keys");
    }
    const auto g = gold.find(a.item_id);
    if (g == gold.end()) throw Error("score_accuracy: no gold answer for \"" + a.item_id + "\"");
    if (a.extracted && *a.extracted == g->second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(attempts.size());
}

RunStats average_runs(std::span<const double> scores) {
  if (scores.empty()) throw Error("average_runs: no runs");
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mean = sum / static_cast<double>(scores.size());
  if (scores.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / static_cast<double>(scores.size()))};
}

TaskScore aggregate_modes(const TaskScore& aot, const TaskScore& cot) {
  if (aot.model_name != cot.model_name || aot.task_id != cot.task_id) {
    throw Error("aggregate_modes: scores for different (model, task) keys");
  }
  return cot.mean > aot.mean ? cot : aot;
}

std::string_view to_string(PairVerdict v) {
  switch (v) {
    case PairVerdict::win: return "win";
    case PairVerdict::tie: return "tie";
    case PairVerdict::loss: return "loss";
  }
  return "?";
}

double score_non_negative_ratio(std::span<const PairVerdict> verdicts) {
  if (verdicts.empty()) throw Error("score_non_negative_ratio: no verdicts");
  const auto not_worse = std::count_if(verdicts.begin(), verdicts.end(),
                                       [](PairVerdict v) { return v != PairVerdict::loss; });
  return static_cast<double>(not_worse) / static_cast<double>(verdicts.size());
}

}  // namespace ameval
