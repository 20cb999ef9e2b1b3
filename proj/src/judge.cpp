// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace ameval {

Rubric Rubric::standard() {
  return Rubric{{{"accuracy", 0.25}, {"comprehensiveness", 0.25}, {"professionalism", 0.25},
                 {"straightforwardness", 0.25}},
                0.0,
                10.0};
}

void Rubric::validate() const {
  if (dimensions.empty()) throw Error("rubric has no dimensions");
  if (!(scale_max > scale_min)) throw Error("rubric scale is empty");
  double sum = 0.0;
  for (const auto& d : dimensions) {
    if (d.name.empty()) throw Error("rubric dimension without a name");
    if (!(d.weight > 0.0)) throw Error("rubric weight for \"" + d.name + "\" must be positive");
    if (d.name.find(':') != std::string::npos || d.name.find('\n') != std::string::npos) {
      throw Error("rubric dimension \"" + d.name + "\" contains ':' or a newline");
    }
    sum += d.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(fmt::format("rubric weights sum to {}, not 1", sum));
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    for (std::size_t j = i + 1; j < dimensions.size(); ++j) {
      std::string a = dimensions[i].name, b = dimensions[j].name;
      std::transform(a.begin(), a.end(), a.begin(), [](unsigned char c) { return std::tolower(c); });
      std::transform(b.begin(), b.end(), b.begin(), [](unsigned char c) { return std::tolower(c); });
      if (a == b) throw Error("duplicate rubric dimension \"" + dimensions[i].name + "\"");
    }
  }
}

std::string_view to_string(PresentationOrder o) { return o == PresentationOrder::AB ? "AB" : "BA"; }

PresentationOrder parse_presentation_order(std::string_view s) {
  if (s == "AB") return PresentationOrder::AB;
  if (s == "BA") return PresentationOrder::BA;
  throw Error("unknown presentation order \"" + std::string(s) + "\"");
}

std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::A: return "A";
    case Winner::B: return "B";
    case Winner::tie: return "tie";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Prompts

namespace {

std::string format_number(double v) { return fmt::format("{}", v); }

TemplateVars rubric_vars(const Rubric& rubric) {
  std::string dims, lines;
  for (const auto& d : rubric.dimensions) {
    dims += "- " + d.name + "\n";
    lines += d.name + ": <number>\n";
  }
  if (!dims.empty()) dims.pop_back();
  return {{"dimensions", dims},
          {"dimension_lines", lines},
          {"scale_min", format_number(rubric.scale_min)},
          {"scale_max", format_number(rubric.scale_max)}};
}

}  // namespace

std::vector<ChatMessage> build_judge_prompt(std::string_view question, std::string_view answer_first,
                                            std::string_view answer_second, const Rubric& rubric,
                                            const TemplateSet& templates) {
  rubric.validate();
  if (trim(answer_first).empty() || trim(answer_second).empty()) {
    throw Error("judge prompt needs two non-empty answers");
  }
  auto vars = rubric_vars(rubric);
  vars["question"] = std::string(question);
  vars["answer_1"] = std::string(answer_first);
  vars["answer_2"] = std::string(answer_second);
  return {ChatMessage{Role::system, templates.get("judge_system")},
          ChatMessage{Role::user, templates.render("judge_pairwise", vars)}};
}

std::vector<ChatMessage> build_absolute_judge_prompt(std::string_view question, std::string_view answer,
                                                     const Rubric& rubric, const TemplateSet& templates) {
  rubric.validate();
  if (trim(answer).empty()) throw Error("judge prompt needs a non-empty answer");
  auto vars = rubric_vars(rubric);
  vars["question"] = std::string(question);
  vars["answer"] = std::string(answer);
  return {ChatMessage{Role::system, templates.get("judge_system")},
          ChatMessage{Role::user, templates.render("judge_absolute", vars)}};
}

// ---------------------------------------------------------------------------
// Verdict parsing

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Strips markdown decoration a judge tends to add: bullets, bold markers.
std::string_view undecorate(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '-' || s.front() == '#')) {
    s.remove_prefix(1);
    s = trim(s);
  }
  while (!s.empty() && s.back() == '*') {
    s.remove_suffix(1);
    s = trim(s);
  }
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  while (!s.empty() && s.front() == '*') s = trim(s.substr(1));
  while (!s.empty() && s.back() == '*') s = trim(s.substr(0, s.size() - 1));
  // Accept "8", "8.5", "8/10".
  if (const auto slash = s.find('/'); slash != std::string_view::npos) s = trim(s.substr(0, slash));
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Block {
  std::map<std::string, double> values;  // lower-cased name -> raw value
};

// Collects "name: value" lines for every header in `headers`. A later
// occurrence of the first header starts the collection over.
std::optional<std::vector<Block>> find_blocks(std::string_view raw, const std::vector<std::string>& headers,
                                              std::size_t& rationale_end) {
  std::vector<Block> blocks(headers.size());
  std::vector<bool> seen(headers.size(), false);
  int current = -1;
  std::size_t offset = 0;
  for (auto line : split_lines(raw)) {
    const auto line_start = offset;
    offset += line.size() + 1;
    const auto t = lower(undecorate(line));
    bool header = false;
    for (std::size_t h = 0; h < headers.size(); ++h) {
      if (t == headers[h]) {
        if (h == 0) {
          blocks.assign(headers.size(), Block{});
          seen.assign(headers.size(), false);
          rationale_end = line_start;
        }
        current = static_cast<int>(h);
        seen[h] = true;
        header = true;
        break;
      }
    }
    if (header || current < 0) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto name = lower(undecorate(line.substr(0, colon)));
    if (auto v = parse_number(line.substr(colon + 1))) blocks[current].values[name] = *v;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) return std::nullopt;
  return blocks;
}

struct Scored {
  DimensionScores per_dimension;
  double total = 0.0;
  bool clamped = false;
};

Scored score_block(const Block& block, const Rubric& rubric, std::string_view slot, std::string_view raw) {
  Scored s;
  for (const auto& d : rubric.dimensions) {
    const auto it = block.values.find(lower(d.name));
    if (it == block.values.end()) {
      throw VerdictParseError(fmt::format("judge output: {} has no \"{}\" score", slot, d.name),
                              std::string(raw));
    }
    double v = it->second;
    if (v < rubric.scale_min || v > rubric.scale_max) {
      v = std::clamp(v, rubric.scale_min, rubric.scale_max);
      s.clamped = true;
    }
    s.per_dimension[d.name] = v;
    s.total += d.weight * v;
  }
  return s;
}

}  // namespace

JudgeVerdict parse_verdict(std::string_view raw, const Rubric& rubric) {
  rubric.validate();
  std::size_t rationale_end = 0;
  const auto blocks = find_blocks(raw, {"[answer 1]", "[answer 2]"}, rationale_end);
  if (!blocks) throw VerdictParseError("judge output has no [Answer 1]/[Answer 2] block", std::string(raw));
  const auto first = score_block((*blocks)[0], rubric, "Answer 1", raw);
  const auto second = score_block((*blocks)[1], rubric, "Answer 2", raw);
  JudgeVerdict v;
  v.per_dimension_first = first.per_dimension;
  v.per_dimension_second = second.per_dimension;
  v.total_first = first.total;
  v.total_second = second.total;
  v.clamped = first.clamped || second.clamped;
  v.rationale = std::string(trim(raw.substr(0, rationale_end)));
  v.raw_judge_output = std::string(raw);
  return v;
}

AbsoluteVerdict parse_absolute_verdict(std::string_view raw, const Rubric& rubric) {
  rubric.validate();
  std::size_t rationale_end = 0;
  const auto blocks = find_blocks(raw, {"[answer]"}, rationale_end);
  if (!blocks) throw VerdictParseError("judge output has no [Answer] block", std::string(raw));
  const auto s = score_block((*blocks)[0], rubric, "Answer", raw);
  AbsoluteVerdict v;
  v.per_dimension = s.per_dimension;
  v.total = s.total;
  v.clamped = s.clamped;
  v.rationale = std::string(trim(raw.substr(0, rationale_end)));
  v.raw_judge_output = std::string(raw);
  return v;
}

// ---------------------------------------------------------------------------
// Judge calls

namespace {

std::int64_t judge_seed(const ModelProfile& judge, std::string_view id, std::string_view order) {
  std::string key(id);
  key.push_back('\x1f');
  key.append(order);
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(judge.seed_base) + (fnv1a64(key) >> 33));
}

}  // namespace

SwappedJudgment judge_pair_swapped(Gateway& gateway, const ModelProfile& judge, std::string_view pair_id,
                                   std::string_view question, std::string_view answer_a,
                                   std::string_view answer_b, const Rubric& rubric,
                                   const TemplateSet& templates) {
  SwappedJudgment out;
  out.prompt_ab = build_judge_prompt(question, answer_a, answer_b, rubric, templates);
  out.prompt_ba = build_judge_prompt(question, answer_b, answer_a, rubric, templates);
  auto call = [&](PresentationOrder order, const std::vector<ChatMessage>& prompt) {
    const auto tag = to_string(order);
    try {
      const auto c = gateway.complete(judge, prompt, judge_seed(judge, pair_id, tag),
                                      std::string(pair_id) + "/" + std::string(tag));
      auto v = parse_verdict(c.text, rubric);
      v.pair_id = std::string(pair_id);
      v.order = order;
      return v;
    } catch (const VerdictParseError& e) {
      throw JudgeCallError(order, e.what());
    } catch (const GatewayError& e) {
      throw JudgeCallError(order, e.what());
    }
  };
  out.ab = call(PresentationOrder::AB, out.prompt_ab);
  out.ba = call(PresentationOrder::BA, out.prompt_ba);
  return out;
}

AbsoluteJudgment judge_absolute(Gateway& gateway, const ModelProfile& judge, std::string_view judgment_id,
                                std::string_view question, std::string_view answer, const Rubric& rubric,
                                const TemplateSet& templates) {
  AbsoluteJudgment out;
  out.prompt = build_absolute_judge_prompt(question, answer, rubric, templates);
  const auto c = gateway.complete(judge, out.prompt, judge_seed(judge, judgment_id, "abs"),
                                  std::string(judgment_id) + "/abs");
  out.verdict = parse_absolute_verdict(c.text, rubric);
  return out;
}

// ---------------------------------------------------------------------------
// Winner resolution

PairScores pair_scores(const JudgeVerdict& ab, const JudgeVerdict& ba) {
  if (ab.order != PresentationOrder::AB || ba.order != PresentationOrder::BA) {
    throw Error("pair_scores expects an AB verdict and a BA verdict");
  }
  return PairScores{ab.total_first, ab.total_second, ba.total_second, ba.total_first};
}

Winner decide_winner(double x, double y, double threshold) {
  if (!(threshold >= 0.0)) throw Error("winner threshold must be non-negative");
  if (x - y > threshold) return Winner::A;
  if (y - x > threshold) return Winner::B;
  return Winner::tie;
}

PairOutcome resolve_pair(const PairScores& s, double threshold) {
  PairOutcome o;
  o.scores = s;
  o.threshold = threshold;
  o.round1 = decide_winner(s.a_round1, s.b_round1, threshold);
  o.round2 = decide_winner(s.a_round2, s.b_round2, threshold);
  o.consistent = o.round1 == o.round2;
  o.winner = o.consistent ? o.round1
                          : decide_winner((s.a_round1 + s.a_round2) / 2.0,
                                          (s.b_round1 + s.b_round2) / 2.0, threshold);
  return o;
}

PairOutcome resolve_pair(std::string pair_id, std::string model_a, std::string model_b,
                         const PairScores& scores, double threshold) {
  auto o = resolve_pair(scores, threshold);
  o.pair_id = std::move(pair_id);
  o.model_a = std::move(model_a);
  o.model_b = std::move(model_b);
  return o;
}

}  // namespace ameval
