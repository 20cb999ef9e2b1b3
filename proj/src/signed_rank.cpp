// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/signed_rank.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ameval {

std::string_view to_string(SignedRankMethod m) {
  return m == SignedRankMethod::exact ? "exact" : "normal_approx";
}

json to_json(const SignedRankResult& r) {
  return json{{"n_input", r.n_input},     {"n_effective", r.n_effective}, {"w_plus", r.w_plus},
              {"w_minus", r.w_minus},     {"z", r.z},                     {"p_two_sided", r.p_two_sided},
              {"method", to_string(r.method)}, {"r", r.r}};
}

std::vector<double> signed_rank_midranks(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[idx[j + 1]]) == std::abs(diffs[idx[i]])) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double effect_size_r(double z, std::size_t n_effective) {
  if (n_effective == 0) throw Error("effect_size_r needs n_effective >= 1");
  return std::clamp(z / std::sqrt(static_cast<double>(n_effective)), -1.0, 1.0);
}

namespace {

// Number of sign assignments with positive half-rank sum <= bound, out of
// 2^n, as an exact double (2^25 fits easily).
double exact_lower_tail(const std::vector<long>& half_ranks, long bound) {
  const long total = std::accumulate(half_ranks.begin(), half_ranks.end(), 0L);
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  long reach = 0;
  for (long h : half_ranks) {
    reach += h;
    for (long s = reach; s >= h; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - h)];
  }
  double count = 0.0;
  for (long s = 0; s <= std::min(bound, total); ++s) count += ways[static_cast<std::size_t>(s)];
  return count;
}

}  // namespace

SignedRankResult wilcoxon_signed_rank(std::span<const double> diffs, std::optional<SignedRankMethod> force) {
  if (diffs.empty()) throw Error("wilcoxon_signed_rank: no differences");
  std::vector<double> nz;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw Error("wilcoxon_signed_rank: non-finite difference");
    if (d != 0.0) nz.push_back(d);
  }
  if (nz.empty()) throw DegenerateInputError("wilcoxon_signed_rank: every difference is zero");

  SignedRankResult res;
  res.n_input = diffs.size();
  res.n_effective = nz.size();
  const auto ranks = signed_rank_midranks(nz);
  for (std::size_t i = 0; i < nz.size(); ++i) (nz[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];

  const double n = static_cast<double>(res.n_effective);
  double tie_term = 0.0;
  std::map<double, int> groups;
  for (double r : ranks) ++groups[r];
  for (const auto& [r, t] : groups) tie_term += (static_cast<double>(t) * t * t - t) / 48.0;
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
  const double diff = res.w_plus - mean;
  if (var > 0.0) {
    const double corrected = std::max(0.0, std::abs(diff) - 0.5);
    res.z = (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) * corrected / std::sqrt(var);
  }
  res.r = effect_size_r(res.z, res.n_effective);

  res.method = force.value_or(res.n_effective <= kExactSignedRankLimit ? SignedRankMethod::exact
                                                                       : SignedRankMethod::normal_approx);
  if (res.method == SignedRankMethod::exact) {
    if (res.n_effective > 40) throw Error("exact signed-rank enumeration limited to 40 differences");
    std::vector<long> half;
    for (double r : ranks) half.push_back(std::lround(2.0 * r));
    const long bound = std::lround(2.0 * std::min(res.w_plus, res.w_minus));
    const double tail = exact_lower_tail(half, bound);
    res.p_two_sided = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(res.n_effective)));
  } else {
    res.p_two_sided = var > 0.0 ? std::min(1.0, std::erfc(std::abs(res.z) / std::sqrt(2.0))) : 1.0;
  }
  return res;
}

}  // namespace ameval
