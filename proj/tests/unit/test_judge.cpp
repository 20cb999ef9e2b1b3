// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "ameval/judge.hpp"
#include "ameval/mock.hpp"
#include "oracles.hpp"

using namespace ameval;

namespace {

const char* kWellFormed =
    "Answer 1 is more thorough.\n"
    "[Answer 1]\naccuracy: 8\ncomprehensiveness: 7\nprofessionalism: 9\nstraightforwardness: 6\noverall: 8\n"
    "[Answer 2]\naccuracy: 5\ncomprehensiveness: 4\nprofessionalism: 6\nstraightforwardness: 7\noverall: 5\n";

GatewayOptions fast() {
  GatewayOptions o;
  o.retry.base_delay = std::chrono::milliseconds(1);
  o.retry.max_attempts = 2;
  return o;
}

}  // namespace

TEST_CASE("rubric validation") {
  CHECK_NOTHROW(Rubric::standard().validate());
  CHECK(Rubric::standard().dimensions.size() == 4);
  Rubric r = Rubric::standard();
  r.dimensions[0].weight = 0.5;
  CHECK_THROWS_AS(r.validate(), Error);
  r = Rubric{{{"a", 1.0}}, 5, 5};
  CHECK_THROWS_AS(r.validate(), Error);
  r = Rubric{{{"a:b", 1.0}}};
  CHECK_THROWS_AS(r.validate(), Error);
  r = Rubric{{{"Depth", 0.5}, {"depth", 0.5}}};
  CHECK_THROWS_AS(r.validate(), Error);
  CHECK_THROWS_AS(Rubric{}.validate(), Error);
}

TEST_CASE("pairwise judge prompt") {
  const auto msgs = build_judge_prompt("What is NAV?", "first text", "second text");
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].role == Role::system);
  const auto& body = msgs[1].content;
  CHECK(body.find("=== Answer 1 ===\nfirst text\n=== End of Answer 1 ===") != std::string::npos);
  CHECK(body.find("=== Answer 2 ===\nsecond text\n=== End of Answer 2 ===") != std::string::npos);
  CHECK(body.find("What is NAV?") != std::string::npos);
  CHECK(body.find("from 0 to 10") != std::string::npos);
  for (const char* d : {"accuracy", "comprehensiveness", "professionalism", "straightforwardness"}) {
    CHECK(body.find(std::string("- ") + d) != std::string::npos);
    CHECK(body.find(std::string(d) + ": <number>") != std::string::npos);
  }
  CHECK_THROWS_AS(build_judge_prompt("Q", " ", "x"), Error);
  const auto abs = build_absolute_judge_prompt("Q", "only");
  CHECK(abs[1].content.find("=== Answer ===\nonly\n=== End of Answer ===") != std::string::npos);
}

TEST_CASE("verdict parsing") {
  const auto v = parse_verdict(kWellFormed);
  CHECK(v.per_dimension_first.at("accuracy") == 8);
  CHECK(v.total_first == doctest::Approx(7.5));
  CHECK(v.total_second == doctest::Approx(5.5));
  CHECK(v.rationale == "Answer 1 is more thorough.");
  CHECK_FALSE(v.clamped);
  CHECK(v.raw_judge_output == kWellFormed);
}

TEST_CASE("verdict parsing tolerates markdown and fractions") {
  const auto v = parse_verdict(
      "**[Answer 1]**\n- **Accuracy**: 8/10\n- Comprehensiveness: **7**\nProfessionalism : 9\nSTRAIGHTFORWARDNESS: 6.5\n"
      "### [Answer 2]\naccuracy: 1\ncomprehensiveness: 2\nprofessionalism: 3\nstraightforwardness: 4\n");
  CHECK(v.per_dimension_first.at("accuracy") == 8);
  CHECK(v.per_dimension_first.at("straightforwardness") == 6.5);
  CHECK(v.total_second == doctest::Approx(2.5));
}

TEST_CASE("out-of-scale values are clamped and flagged") {
  const auto v = parse_verdict(
      "[Answer 1]\naccuracy: 12\ncomprehensiveness: 7\nprofessionalism: 9\nstraightforwardness: 6\n"
      "[Answer 2]\naccuracy: -3\ncomprehensiveness: 4\nprofessionalism: 6\nstraightforwardness: 7\n");
  CHECK(v.clamped);
  CHECK(v.per_dimension_first.at("accuracy") == 10);
  CHECK(v.per_dimension_second.at("accuracy") == 0);
}

TEST_CASE("malformed verdicts raise with the raw text") {
  const std::string missing =
      "[Answer 1]\naccuracy: 8\ncomprehensiveness: 7\nprofessionalism: 9\n"
      "[Answer 2]\naccuracy: 5\ncomprehensiveness: 4\nprofessionalism: 6\nstraightforwardness: 7\n";
  try {
    parse_verdict(missing);
    FAIL("expected an error");
  } catch (const VerdictParseError& e) {
    CHECK(std::string(e.what()).find("straightforwardness") != std::string::npos);
    CHECK(e.raw_output() == missing);
  }
  CHECK_THROWS_AS(parse_verdict("Both are fine."), VerdictParseError);
  CHECK_THROWS_AS(parse_verdict("[Answer 1]\naccuracy: 3\n"), VerdictParseError);
  CHECK_THROWS_AS(parse_absolute_verdict("nothing"), VerdictParseError);
}

TEST_CASE("the last block pair wins over echoed instructions") {
  const auto prompt = build_judge_prompt("Q", "x", "y")[1].content;
  const auto v = parse_verdict(prompt + "\n" + kWellFormed);
  CHECK(v.total_first == doctest::Approx(7.5));
}

TEST_CASE("custom rubric weights") {
  const Rubric r{{{"depth", 0.75}, {"clarity", 0.25}}, 1, 5};
  const auto v = parse_absolute_verdict("ok\n[Answer]\ndepth: 4\nclarity: 2\n", r);
  CHECK(v.total == doctest::Approx(3.5));
  CHECK(v.rationale == "ok");
}

TEST_CASE("swap protocol maps presentation slots back to models") {
  JudgeMockConfig cfg;
  cfg.scoring = JudgeMockConfig::Scoring::hash;
  cfg.first_slot_bonus = 1.0;
  JudgeMock reference(cfg);
  auto judge = make_judge_mock(cfg);
  Gateway gw(fast());
  const std::string a = "answer from the first system";
  const std::string b = "the other system's answer";
  const auto j = judge_pair_swapped(gw, judge, "p1", "Q", a, b);
  CHECK(j.ab.order == PresentationOrder::AB);
  CHECK(j.ba.order == PresentationOrder::BA);
  CHECK(j.prompt_ba[1].content.find("=== Answer 1 ===\n" + b) != std::string::npos);
  const auto s = pair_scores(j.ab, j.ba);
  CHECK(s.a_round1 == std::min(10.0, reference.base_score(a) + 1.0));
  CHECK(s.b_round1 == reference.base_score(b));
  CHECK(s.a_round2 == reference.base_score(a));
  CHECK(s.b_round2 == std::min(10.0, reference.base_score(b) + 1.0));
  CHECK(gw.wire_attempts() == 2);
  CHECK_THROWS_AS(pair_scores(j.ba, j.ab), Error);
}

TEST_CASE("a bad reply names the failing order") {
  const auto script = parse_mock_script(json::parse(
      std::string(R"({"name":"j","rules":[{"request_id":"/BA$","response":"gibberish"},{"any":true,"response":)") +
      json(kWellFormed).dump() + "}]}"));
  Gateway gw(fast());
  try {
    judge_pair_swapped(gw, make_mock(script), "p1", "Q", "x", "y");
    FAIL("expected an error");
  } catch (const JudgeCallError& e) {
    CHECK(e.order() == PresentationOrder::BA);
    CHECK(std::string(e.what()).find("order BA") != std::string::npos);
  }
}

TEST_CASE("absolute judging") {
  JudgeMockConfig cfg;
  cfg.scoring = JudgeMockConfig::Scoring::fixed;
  cfg.fixed_score = 6.0;
  Gateway gw(fast());
  const auto j = judge_absolute(gw, make_judge_mock(cfg), "x", "Q", "answer");
  CHECK(j.verdict.total == doctest::Approx(6.0));
  CHECK(j.prompt.size() == 2);
}

TEST_CASE("winner decision") {
  CHECK(decide_winner(8, 7.5, 1.0) == Winner::tie);
  CHECK(decide_winner(8, 7.5, 0.4) == Winner::A);
  CHECK(decide_winner(7.5, 8, 0.4) == Winner::B);
  CHECK(decide_winner(8, 7, 1.0) == Winner::tie);
  CHECK(decide_winner(5, 5, 0.0) == Winner::tie);
  CHECK_THROWS_AS(decide_winner(1, 2, -0.1), Error);
  CHECK_THROWS_AS(decide_winner(1, 2, std::nan("")), Error);
}

TEST_CASE("winner decision is antisymmetric and matches the reference rule") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> score(0, 10);
  std::uniform_real_distribution<double> thr(0, 3);
  for (int i = 0; i < 1000; ++i) {
    const double x = score(rng), y = score(rng), t = thr(rng);
    const int expected = oracle::winner(x, y, t);
    const auto w = decide_winner(x, y, t);
    CHECK(static_cast<int>(w == Winner::A) - static_cast<int>(w == Winner::B) == expected);
    const auto m = decide_winner(y, x, t);
    CHECK((w == Winner::tie ? m == Winner::tie : m != w && m != Winner::tie));
    CHECK(decide_winner(x, y, std::abs(x - y)) == Winner::tie);
  }
}

TEST_CASE("pair resolution at two thresholds") {
  const PairScores p1{9.0, 7.0, 8.5, 7.0};
  const PairScores p2{7.5, 7.0, 7.0, 7.3};
  const PairScores p3{7.5, 7.0, 7.0, 7.0};
  int consistent0 = 0, consistent1 = 0;
  for (const auto& p : {p1, p2, p3}) {
    consistent0 += resolve_pair(p, 0.0).consistent;
    consistent1 += resolve_pair(p, 1.0).consistent;
  }
  CHECK(consistent0 == 1);
  CHECK(consistent1 == 3);
  const auto o = resolve_pair(p1, 1.0);
  CHECK(o.round1 == Winner::A);
  CHECK(o.winner == Winner::A);
  CHECK(resolve_pair(p3, 1.0).winner == Winner::tie);
}

TEST_CASE("disagreeing rounds fall back to the per-model mean") {
  const auto o = resolve_pair("p", "x", "y", PairScores{9, 5, 5, 6}, 1.0);
  CHECK(o.round1 == Winner::A);
  CHECK(o.round2 == Winner::tie);
  CHECK_FALSE(o.consistent);
  CHECK(o.winner == Winner::A);
  CHECK(o.model_a == "x");
  const auto flat = resolve_pair(PairScores{8, 7, 6, 7}, 0.5);
  CHECK_FALSE(flat.consistent);
  CHECK(flat.winner == Winner::tie);
}

TEST_CASE("relabeling the models mirrors the outcome") {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> score(0, 20);
  for (int i = 0; i < 1000; ++i) {
    const PairScores s{score(rng) / 2.0, score(rng) / 2.0, score(rng) / 2.0, score(rng) / 2.0};
    const PairScores mirrored{s.b_round2, s.a_round2, s.b_round1, s.a_round1};
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
      const auto o = resolve_pair(s, t);
      const auto m = resolve_pair(mirrored, t);
      CHECK(o.consistent == m.consistent);
      const Winner flipped = o.winner == Winner::A ? Winner::B : o.winner == Winner::B ? Winner::A : Winner::tie;
      CHECK(m.winner == flipped);
    }
  }
}
