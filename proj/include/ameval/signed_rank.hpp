// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Wilcoxon signed-rank test for paired differences.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ameval/util.hpp"

namespace ameval {

enum class SignedRankMethod { exact, normal_approx };
std::string_view to_string(SignedRankMethod m);

struct SignedRankResult {
  std::size_t n_input = 0;
  std::size_t n_effective = 0;  // after dropping zero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  double z = 0.0;  // normal-approximation statistic, signed by w_plus - w_minus
  double p_two_sided = 1.0;
  SignedRankMethod method = SignedRankMethod::exact;
  double r = 0.0;  // z / sqrt(n_effective)
};

json to_json(const SignedRankResult& r);

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Largest effective sample size for which the exact null distribution is
/// enumerated.
inline constexpr std::size_t kExactSignedRankLimit = 25;

/// Absolute values ranked ascending, mid-ranks for ties. Zeros must already
/// be removed.
std::vector<double> signed_rank_midranks(std::span<const double> nonzero_diffs);

/// Zero differences are dropped. The exact method (n_effective up to 25)
/// counts sign assignments whose positive-rank sum is at most
/// min(w_plus, w_minus); mid-ranks are handled by working in half-ranks.
/// Larger samples use the tie-corrected normal approximation with a 0.5
/// continuity correction. `force` overrides the method choice.
SignedRankResult wilcoxon_signed_rank(std::span<const double> diffs,
                                      std::optional<SignedRankMethod> force = std::nullopt);

/// z / sqrt(n_effective), clamped to [-1, 1].
double effect_size_r(double z, std::size_t n_effective);

}  // namespace ameval
