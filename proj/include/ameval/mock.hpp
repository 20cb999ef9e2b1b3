// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic in-process models for tests and dry runs.
//
// A script is an ordered list of rules; the first rule whose matcher fires
// answers the request. Responses are picked from the rule's list by
// `seed mod size`, so varying seeds give reproducible "noise". Scripts are
// loadable from JSON:
//
//   {"type": "script", "name": "m",
//    "rules": [{"contains": "...", "responses": ["..."], "fail_first": 2},
//              {"request_id": "regex", "response": "...", "delay_ms": 5},
//              {"any": true, "response": "OK"}]}
//
// A judge mock ({"type": "judge", ...}) reads the answers out of a judge
// prompt and emits a well-formed verdict block.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "ameval/gateway.hpp"

namespace ameval {

struct MockRule {
  enum class Match { any, contains, request_id };
  Match match = Match::any;
  std::string pattern;
  std::vector<std::string> responses;
  std::chrono::milliseconds delay{0};
  int fail_first = 0;        // attempts 1..fail_first fail transiently
  bool always_fail = false;
  FinishReason finish_reason = FinishReason::stop;
};

struct MockScript {
  std::string name = "mock";
  std::vector<MockRule> rules;
};

MockScript parse_mock_script(const json& doc);

/// Counts calls so tests can assert on traffic.
class CountingBackend : public ModelBackend {
 public:
  std::uint64_t calls() const { return calls_.load(); }

 protected:
  void count() { ++calls_; }

 private:
  std::atomic<std::uint64_t> calls_{0};
};

class ScriptedMock final : public CountingBackend {
 public:
  explicit ScriptedMock(MockScript script);
  WireReply send(const WireRequest& request) override;
  const MockScript& script() const { return script_; }

 private:
  MockScript script_;
  std::vector<std::regex> id_patterns_;
};

struct JudgeMockConfig {
  enum class Scoring { hash, length, fixed };
  Scoring scoring = Scoring::hash;
  double first_slot_bonus = 0.0;
  int length_divisor = 20;  // length scoring: one point per this many characters
  double fixed_score = 7.0;
  std::vector<std::string> dimensions{"accuracy", "comprehensiveness", "professionalism",
                                      "straightforwardness"};
};

JudgeMockConfig parse_judge_mock_config(const json& doc);

/// Scores every answer found in a judge prompt with one deterministic value
/// per answer (the same on every dimension), plus `first_slot_bonus` for
/// the answer presented first in a pairwise prompt.
class JudgeMock final : public CountingBackend {
 public:
  explicit JudgeMock(JudgeMockConfig config) : config_(std::move(config)) {}
  WireReply send(const WireRequest& request) override;

  /// The base score the mock assigns to an answer, before position bonus.
  double base_score(std::string_view answer) const;

 private:
  JudgeMockConfig config_;
};

/// Profile routed through a scripted mock; max_concurrency and rate limits
/// are set high so tests control concurrency through batch limits.
ModelProfile make_mock(MockScript script);
ModelProfile make_judge_mock(JudgeMockConfig config, std::string name = "mock-judge");
ModelProfile make_backend_profile(std::string name, std::shared_ptr<ModelBackend> backend);

std::shared_ptr<ModelBackend> load_mock_backend(const std::filesystem::path& path);

}  // namespace ameval
