// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// LLM-as-judge scoring: rubric prompts, verdict parsing, the position-swap
// protocol and threshold-based winner resolution.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/gateway.hpp"
#include "ameval/prompt.hpp"

namespace ameval {

struct RubricDimension {
  std::string name;
  double weight = 0.25;
};

struct Rubric {
  std::vector<RubricDimension> dimensions;
  double scale_min = 0.0;
  double scale_max = 10.0;

  /// accuracy, comprehensiveness, professionalism, straightforwardness;
  /// equal weights on a 0-10 scale.
  static Rubric standard();
  void validate() const;
};

enum class PresentationOrder { AB, BA };
std::string_view to_string(PresentationOrder o);
PresentationOrder parse_presentation_order(std::string_view s);

using DimensionScores = std::map<std::string, double>;

/// One pairwise judgment. "first" and "second" refer to presentation slots,
/// not to models.
struct JudgeVerdict {
  std::string pair_id;
  PresentationOrder order = PresentationOrder::AB;
  DimensionScores per_dimension_first;
  DimensionScores per_dimension_second;
  double total_first = 0.0;
  double total_second = 0.0;
  std::string rationale;
  std::string raw_judge_output;
  bool clamped = false;  // some value was outside the scale
};

struct AbsoluteVerdict {
  DimensionScores per_dimension;
  double total = 0.0;
  std::string rationale;
  std::string raw_judge_output;
  bool clamped = false;
};

class VerdictParseError : public Error {
 public:
  VerdictParseError(const std::string& message, std::string raw)
      : Error(message), raw_(std::move(raw)) {}
  const std::string& raw_output() const { return raw_; }

 private:
  std::string raw_;
};

std::vector<ChatMessage> build_judge_prompt(std::string_view question, std::string_view answer_first,
                                            std::string_view answer_second,
                                            const Rubric& rubric = Rubric::standard(),
                                            const TemplateSet& templates = TemplateSet::defaults());

std::vector<ChatMessage> build_absolute_judge_prompt(
    std::string_view question, std::string_view answer, const Rubric& rubric = Rubric::standard(),
    const TemplateSet& templates = TemplateSet::defaults());

/// Parses the "[Answer 1]" / "[Answer 2]" blocks of "name: number" lines.
/// Values outside the scale are clamped and flagged. The last block pair in
/// the output wins, so echoed instructions do not confuse the parser.
JudgeVerdict parse_verdict(std::string_view raw_judge_output, const Rubric& rubric = Rubric::standard());
AbsoluteVerdict parse_absolute_verdict(std::string_view raw_judge_output,
                                       const Rubric& rubric = Rubric::standard());

class JudgeCallError : public Error {
 public:
  JudgeCallError(PresentationOrder order, const std::string& message)
      : Error("judge call for order " + std::string(to_string(order)) + " failed: " + message),
        order_(order) {}
  PresentationOrder order() const { return order_; }

 private:
  PresentationOrder order_;
};

struct SwappedJudgment {
  JudgeVerdict ab;  // answer A shown first
  JudgeVerdict ba;  // answer B shown first
  std::vector<ChatMessage> prompt_ab;
  std::vector<ChatMessage> prompt_ba;
};

/// Two sequential judge calls, the second with the answers swapped.
SwappedJudgment judge_pair_swapped(Gateway& gateway, const ModelProfile& judge,
                                   std::string_view pair_id, std::string_view question,
                                   std::string_view answer_a, std::string_view answer_b,
                                   const Rubric& rubric = Rubric::standard(),
                                   const TemplateSet& templates = TemplateSet::defaults());

struct AbsoluteJudgment {
  AbsoluteVerdict verdict;
  std::vector<ChatMessage> prompt;
};

AbsoluteJudgment judge_absolute(Gateway& gateway, const ModelProfile& judge,
                                std::string_view judgment_id, std::string_view question,
                                std::string_view answer, const Rubric& rubric = Rubric::standard(),
                                const TemplateSet& templates = TemplateSet::defaults());

/// Per-model totals from both rounds. Round 1 is order AB, round 2 is BA.
struct PairScores {
  double a_round1 = 0.0;
  double b_round1 = 0.0;
  double a_round2 = 0.0;
  double b_round2 = 0.0;
};

PairScores pair_scores(const JudgeVerdict& ab, const JudgeVerdict& ba);

enum class Winner { A, B, tie };
std::string_view to_string(Winner w);

/// A if x - y > threshold, B if y - x > threshold, tie otherwise.
Winner decide_winner(double score_x, double score_y, double threshold);

struct PairOutcome {
  std::string pair_id;
  std::string model_a;
  std::string model_b;
  PairScores scores;
  double threshold = 0.0;
  Winner round1 = Winner::tie;
  Winner round2 = Winner::tie;
  Winner winner = Winner::tie;
  bool consistent = true;
};

/// Rounds that agree decide the pair (tie/tie counts as agreement); rounds
/// that disagree fall back to the per-model mean over both rounds.
PairOutcome resolve_pair(const PairScores& scores, double threshold);
PairOutcome resolve_pair(std::string pair_id, std::string model_a, std::string model_b,
                         const PairScores& scores, double threshold);

}  // namespace ameval
