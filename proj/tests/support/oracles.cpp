// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ameval::oracle {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::int64_t derive_seed(std::int64_t seed_base, const std::string& item_id, int run_index,
                         const std::string& mode) {
  const std::string key = item_id + '\x1f' + std::to_string(run_index) + '\x1f' + mode;
  const std::uint64_t top31 = fnv1a64(key) / (1ULL << 33);
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(seed_base) + top31);
}

std::vector<double> definitional_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int smaller = 0;
    int equal = 0;
    for (double x : v) {
      if (x < v[i]) ++smaller;
      if (x == v[i]) ++equal;
    }
    ranks[i] = 1.0 + smaller + (equal - 1) / 2.0;
  }
  return ranks;
}

SignedRank brute_force_signed_rank(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  if (nz.empty()) throw std::invalid_argument("all differences are zero");
  if (nz.size() > 26) throw std::invalid_argument("too many differences to enumerate");
  std::vector<double> abs_values;
  for (double d : nz) abs_values.push_back(std::fabs(d));
  const auto ranks = definitional_ranks(abs_values);

  SignedRank out;
  out.n = nz.size();
  for (std::size_t i = 0; i < nz.size(); ++i) (nz[i] > 0 ? out.w_plus : out.w_minus) += ranks[i];
  const double lower = std::min(out.w_plus, out.w_minus);

  const std::uint64_t total = 1ULL << nz.size();
  std::uint64_t at_or_below = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nz.size(); ++i) {
      if ((mask >> i) & 1U) sum += ranks[i];
    }
    if (sum <= lower) ++at_or_below;
  }
  out.p = std::min(1.0, 2.0 * static_cast<double>(at_or_below) / static_cast<double>(total));
  return out;
}

double tie_free_exact_p(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  std::vector<double> abs_values;
  for (double d : nz) abs_values.push_back(std::fabs(d));
  const auto ranks = definitional_ranks(abs_values);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (ranks[i] != std::floor(ranks[i])) throw std::invalid_argument("data has ties");
    if (nz[i] > 0) w_plus += ranks[i];
  }
  const int n = static_cast<int>(nz.size());
  const int max_sum = n * (n + 1) / 2;
  const int lower = static_cast<int>(std::min(w_plus, max_sum - w_plus));
  // ways[s] = number of subsets of {1..k} summing to s.
  std::vector<double> ways(max_sum + 1, 0.0);
  ways[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    for (int s = max_sum; s >= k; --s) ways[s] += ways[s - k];
  }
  double count = 0.0;
  for (int s = 0; s <= lower; ++s) count += ways[s];
  return std::min(1.0, 2.0 * count / std::ldexp(1.0, n));
}

std::pair<int, int> binomial_central_interval(int n, double p, double tail) {
  std::vector<long double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) {
    const long double log_c = std::lgamma(n + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(n - k + 1.0L);
    pmf[k] = std::exp(log_c + k * std::log(static_cast<long double>(p)) +
                      (n - k) * std::log1p(-static_cast<long double>(p)));
  }
  int lo = 0;
  long double below = 0.0L;
  while (lo < n && below + pmf[lo] <= tail) below += pmf[lo++];
  int hi = n;
  long double above = 0.0L;
  while (hi > 0 && above + pmf[hi] <= tail) above += pmf[hi--];
  return {lo, hi};
}

int winner(double x, double y, double threshold) {
  if (x - y > threshold) return 1;
  if (y - x > threshold) return -1;
  return 0;
}

double consistency(const std::vector<std::vector<double>>& pairs, double threshold) {
  int agree = 0;
  for (const auto& p : pairs) {
    if (winner(p[0], p[1], threshold) == winner(p[2], p[3], threshold)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(pairs.size());
}

ExamTables load_exam_tables() {
  std::ifstream in(std::string(AMEVAL_FIXTURES) + "/exam_tables.json");
  if (!in) throw std::runtime_error("missing exam_tables.json fixture");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto doc = nlohmann::json::parse(ss.str());
  ExamTables t;
  t.models = doc.at("models").get<std::vector<std::string>>();
  t.tasks = doc.at("tasks").get<std::vector<std::string>>();
  t.aot = doc.at("aot").get<std::vector<std::vector<double>>>();
  t.cot = doc.at("cot").get<std::vector<std::vector<double>>>();
  t.published = doc.at("published").get<std::vector<std::vector<double>>>();
  return t;
}

}  // namespace ameval::oracle
