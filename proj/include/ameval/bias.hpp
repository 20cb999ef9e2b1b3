// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Judge bias studies: position effect, threshold/consistency curve, and
// length and verbosity preference.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ameval/judge.hpp"
#include "ameval/signed_rank.hpp"

namespace ameval {

struct ConsistencyPoint {
  double threshold = 0.0;
  double consistency = 0.0;  // fraction of pairs whose two rounds agree
  std::size_t n_pairs = 0;
};

/// Re-resolves every pair at each threshold. Thresholds must be ascending.
std::vector<ConsistencyPoint> consistency_curve(std::span<const PairScores> pairs,
                                                std::span<const double> thresholds);

/// threshold,consistency,n_pairs with a header line.
std::string consistency_curve_csv(std::span<const ConsistencyPoint> curve);

struct PositionBiasReport {
  SignedRankResult test;
  std::vector<std::string> warnings;
};

/// One entry per answer: (total when shown first, total when shown second).
/// Throws DegenerateInputError("no detectable position effect") when every
/// difference is zero.
PositionBiasReport position_bias_experiment(std::span<const std::pair<double, double>> first_second);

/// Converts swapped judgments into the per-answer (first, second) totals
/// position_bias_experiment expects: two entries per pair.
std::vector<std::pair<double, double>> position_samples(std::span<const PairScores> pairs);

struct ScoredAnswer {
  std::string text;
  double score = 0.0;
};

struct LengthBiasReport {
  double group_long_mean = 0.0;
  double group_short_mean = 0.0;
  std::size_t n_long = 0;
  std::size_t n_short = 0;
  std::vector<double> per_question_diffs;
  std::optional<SignedRankResult> test;  // absent when every diff is zero
  std::string split_rule;
  std::vector<std::string> warnings;
};

/// Within each question, answers longer (in characters) than the question's
/// median length form the long group and the rest the short group. If no
/// answer is strictly longer than the median, answers at the median count
/// as long. Questions whose answers all have the same length are skipped.
LengthBiasReport length_bias_experiment(std::span<const std::vector<ScoredAnswer>> questions);

enum class VerbosityType { repetition, filler, off_topic };
std::string_view to_string(VerbosityType t);
VerbosityType parse_verbosity_type(std::string_view s);

struct VerbosityPair {
  double concise_score = 0.0;
  double verbose_score = 0.0;
  VerbosityType type = VerbosityType::repetition;
};

struct VerbosityBucket {
  double mean_diff = 0.0;  // verbose - concise
  std::size_t n = 0;
  std::optional<SignedRankResult> test;  // absent when every diff is zero
};

/// Types with no pairs are left out of the result.
std::map<VerbosityType, VerbosityBucket> verbosity_experiment(std::span<const VerbosityPair> pairs);

}  // namespace ameval
