// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/bias.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ameval {

std::vector<ConsistencyPoint> consistency_curve(std::span<const PairScores> pairs,
                                                std::span<const double> thresholds) {
  if (pairs.empty()) throw Error("consistency_curve: no pairs");
  if (thresholds.empty()) throw Error("consistency_curve: no thresholds");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error("consistency_curve: thresholds must be ascending");
  }
  std::vector<ConsistencyPoint> out;
  for (double t : thresholds) {
    std::size_t agree = 0;
    for (const auto& p : pairs) agree += resolve_pair(p, t).consistent ? 1 : 0;
    out.push_back({t, static_cast<double>(agree) / static_cast<double>(pairs.size()), pairs.size()});
  }
  return out;
}

std::string consistency_curve_csv(std::span<const ConsistencyPoint> curve) {
  std::string out = "threshold,consistency,n_pairs\n";
  for (const auto& p : curve) out += fmt::format("{},{},{}\n", p.threshold, p.consistency, p.n_pairs);
  return out;
}

PositionBiasReport position_bias_experiment(std::span<const std::pair<double, double>> first_second) {
  if (first_second.empty()) throw Error("position_bias_experiment: no samples");
  PositionBiasReport report;
  if (first_second.size() < 6) {
    report.warnings.push_back(fmt::format("only {} samples; the test has little power below 6",
                                          first_second.size()));
    spdlog::warn("position bias: {}", report.warnings.back());
  }
  std::vector<double> diffs;
  for (const auto& [first, second] : first_second) diffs.push_back(first - second);
  try {
    report.test = wilcoxon_signed_rank(diffs);
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError("no detectable position effect");
  }
  return report;
}

std::vector<std::pair<double, double>> position_samples(std::span<const PairScores> pairs) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pairs) {
    out.emplace_back(p.a_round1, p.a_round2);  // A first in round 1
    out.emplace_back(p.b_round2, p.b_round1);  // B first in round 2
  }
  return out;
}

LengthBiasReport length_bias_experiment(std::span<const std::vector<ScoredAnswer>> questions) {
  if (questions.empty()) throw Error("length_bias_experiment: no questions");
  LengthBiasReport report;
  report.split_rule =
      "per question: long = length above the median character length (at the median if none above), "
      "short = the rest";
  double long_sum = 0.0, short_sum = 0.0;
  for (std::size_t q = 0; q < questions.size(); ++q) {
    const auto& answers = questions[q];
    if (answers.size() < 2) throw Error(fmt::format("length_bias_experiment: question {} has fewer than 2 answers", q));
    std::vector<std::size_t> len;
    for (const auto& a : answers) len.push_back(utf8_length(a.text));
    auto sorted = len;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
      report.warnings.push_back(fmt::format("question {}: all answers have the same length; skipped", q));
      spdlog::warn("length bias: {}", report.warnings.back());
      continue;
    }
    const std::size_t m = sorted.size();
    const double median = m % 2 == 1 ? static_cast<double>(sorted[m / 2])
                                     : (static_cast<double>(sorted[m / 2 - 1]) + sorted[m / 2]) / 2.0;
    const bool any_above = static_cast<double>(sorted.back()) > median;
    double ls = 0.0, ss = 0.0;
    std::size_t ln = 0, sn = 0;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      const double l = static_cast<double>(len[i]);
      const bool is_long = any_above ? l > median : l >= median;
      (is_long ? ls : ss) += answers[i].score;
      ++(is_long ? ln : sn);
    }
    report.per_question_diffs.push_back(ls / static_cast<double>(ln) - ss / static_cast<double>(sn));
    long_sum += ls;
    short_sum += ss;
    report.n_long += ln;
    report.n_short += sn;
  }
  if (report.per_question_diffs.empty()) throw DegenerateInputError("length_bias_experiment: every question was skipped");
  report.group_long_mean = long_sum / static_cast<double>(report.n_long);
  report.group_short_mean = short_sum / static_cast<double>(report.n_short);
  try {
    report.test = wilcoxon_signed_rank(report.per_question_diffs);
  } catch (const DegenerateInputError&) {
    report.warnings.push_back("every per-question difference is zero; no test reported");
  }
  return report;
}

std::string_view to_string(VerbosityType t) {
  switch (t) {
    case VerbosityType::repetition: return "repetition";
    case VerbosityType::filler: return "filler";
    case VerbosityType::off_topic: return "off_topic";
  }
  return "?";
}

VerbosityType parse_verbosity_type(std::string_view s) {
  if (s == "repetition") return VerbosityType::repetition;
  if (s == "filler") return VerbosityType::filler;
  if (s == "off_topic") return VerbosityType::off_topic;
  throw Error("unknown verbosity type \"" + std::string(s) + "\"");
}

std::map<VerbosityType, VerbosityBucket> verbosity_experiment(std::span<const VerbosityPair> pairs) {
  std::map<VerbosityType, std::vector<double>> diffs;
  for (const auto& p : pairs) diffs[p.type].push_back(p.verbose_score - p.concise_score);
  std::map<VerbosityType, VerbosityBucket> out;
  for (const auto& [type, d] : diffs) {
    VerbosityBucket b;
    b.n = d.size();
    for (double x : d) b.mean_diff += x;
    b.mean_diff /= static_cast<double>(d.size());
    try {
      b.test = wilcoxon_signed_rank(d);
    } catch (const DegenerateInputError&) {
    }
    out.emplace(type, b);
  }
  return out;
}

}  // namespace ameval
