// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <thread>

#include "ameval/review.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace ameval;
using ameval::testing::TempDir;

namespace {

std::vector<ReviewPair> make_pairs(int n) {
  std::vector<ReviewPair> pairs;
  for (int i = 0; i < n; ++i) {
    const auto id = "pair-" + std::to_string(i);
    pairs.push_back({id, "Question " + std::to_string(i),
                     {{"alpha", "alpha answer " + std::to_string(i)}, {"beta", "beta answer " + std::to_string(i)}}});
  }
  return pairs;
}

ReviewVerdict verdict_for(const ReviewSession& s, const std::string& pair_id, const std::string& preferred) {
  return s.blinding.at(pair_id).left_model == preferred ? ReviewVerdict::left : ReviewVerdict::right;
}

}  // namespace

TEST_CASE("session validation") {
  CHECK_THROWS_AS(create_session("bad id!", make_pairs(1), 1), ReviewError);
  CHECK_THROWS_AS(create_session("s", {}, 1), ReviewError);
  auto pairs = make_pairs(2);
  pairs[1].pair_id = pairs[0].pair_id;
  CHECK_THROWS_AS(create_session("s", pairs, 1), ReviewError);
  pairs = make_pairs(1);
  pairs[0].answer_by_model.emplace("gamma", "third");
  CHECK_THROWS_AS(create_session("s", pairs, 1), ReviewError);
  pairs = make_pairs(1);
  pairs[0].pair_id = "alpha-vs-beta";
  CHECK_THROWS_WITH_AS(create_session("s", pairs, 1), doctest::Contains("reveals"), ReviewError);
}

TEST_CASE("blinding is a fair, reproducible coin per pair") {
  const auto s = create_session("s", make_pairs(200), 2026);
  int alpha_left = 0;
  for (const auto& [id, b] : s.blinding) {
    CHECK(b.left_model != b.right_model);
    alpha_left += b.left_model == "alpha";
  }
  const auto [lo, hi] = oracle::binomial_central_interval(200, 0.5, 0.025);
  CHECK(lo >= 80);
  CHECK(hi <= 120);
  CHECK(alpha_left >= lo);
  CHECK(alpha_left <= hi);

  const auto again = create_session("s", make_pairs(200), 2026);
  for (const auto& [id, b] : s.blinding) CHECK(again.blinding.at(id).left_model == b.left_model);

  int differing = 0;
  const auto other = create_session("s", make_pairs(200), 2027);
  for (const auto& [id, b] : s.blinding) differing += other.blinding.at(id).left_model != b.left_model;
  CHECK(differing > 0);
}

TEST_CASE("blinding stays balanced across seeds") {
  const auto [lo, hi] = oracle::binomial_central_interval(200, 0.5, 0.025);
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto s = create_session("s", make_pairs(200), seed);
    int alpha_left = 0;
    for (const auto& [id, b] : s.blinding) alpha_left += b.left_model == "alpha";
    inside += alpha_left >= lo && alpha_left <= hi;
  }
  // About 95% of seeds land inside the central interval.
  CHECK(inside >= 34);
}

TEST_CASE("reviewer order is a stable permutation") {
  const auto s = create_session("s", make_pairs(30), 5);
  auto a = reviewer_order(s, "ann");
  CHECK(a == reviewer_order(s, "ann"));
  CHECK(a != reviewer_order(s, "bob"));
  std::sort(a.begin(), a.end());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == i);
}

TEST_CASE("payloads hide model identities") {
  auto pairs = make_pairs(1);
  pairs[0].answer_by_model["alpha"] = "As alpha, I think bonds.";
  const auto s = create_session("s", pairs, 3);
  const auto payload = blinded_payload(s, s.pairs[0]);
  const auto text = payload.dump();
  CHECK(text.find("alpha") == std::string::npos);
  CHECK(text.find("beta") == std::string::npos);
  CHECK(payload.contains("answer_left"));
  CHECK(payload.contains("answer_right"));
  CHECK(payload.size() == 4);
}

TEST_CASE("plurality per pair, ties when reviewers split") {
  const auto s = create_session("s", make_pairs(3), 11);
  auto verdict = [&](const std::string& pair, const std::string& reviewer, ReviewVerdict v) {
    return ReviewEvent{"verdict", "t", "s", pair, reviewer, v, {}, std::nullopt};
  };
  const std::vector<ReviewEvent> events{
      verdict("pair-0", "r1", verdict_for(s, "pair-0", "alpha")),
      verdict("pair-0", "r2", verdict_for(s, "pair-0", "beta")),
      verdict("pair-1", "r1", verdict_for(s, "pair-1", "alpha")),
      verdict("pair-1", "r2", verdict_for(s, "pair-1", "alpha")),
      verdict("pair-1", "r3", verdict_for(s, "pair-1", "beta")),
      verdict("pair-2", "r1", verdict_for(s, "pair-2", "alpha")),
      verdict("pair-2", "r1", verdict_for(s, "pair-2", "beta")),
      ReviewEvent{"serve", "t", "s", "pair-2", "r9", std::nullopt, {}, std::nullopt},
  };
  const auto board = human_leaderboard(s, events);
  CHECK(board.pairs_decided == 3);
  CHECK(board.verdicts == 6);
  const auto& alpha = board.models.at("alpha");
  const auto& beta = board.models.at("beta");
  CHECK(alpha.ties == 1);
  CHECK(alpha.wins == 1);
  CHECK(alpha.losses == 1);
  CHECK(beta.wins == 1);
  CHECK(alpha.win_rate == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(human_leaderboard(s, std::vector<ReviewEvent>{}), ReviewError);
}

TEST_CASE("store serves each pair once and records verdicts") {
  TempDir dir;
  ReviewStore store(dir.path());
  store.create("s1", make_pairs(3), 9);
  CHECK_THROWS_AS(store.create("s1", make_pairs(3), 9), ReviewError);

  const auto first = store.next_pair("s1", "ann");
  CHECK(store.next_pair("s1", "ann") == first);
  CHECK(store.events("s1").size() == 1);
  CHECK(store.progress("s1", "ann")["reviewed"] == 0);

  CHECK_THROWS_AS(store.submit_verdict("s1", "pair-2", "bob", ReviewVerdict::left), ReviewError);
  CHECK_THROWS_AS(store.submit_verdict("nope", "pair-0", "ann", ReviewVerdict::left), ReviewError);
  CHECK_THROWS_AS(store.next_pair("s1", " "), ReviewError);

  std::set<std::string> seen;
  json next = first;
  while (!next.contains("done")) {
    const auto id = next["pair_id"].get<std::string>();
    CHECK(seen.insert(id).second);
    store.submit_verdict("s1", id, "ann", verdict_for(store.session("s1"), id, "alpha"), {{"accuracy", 4}}, "ok");
    next = store.next_pair("s1", "ann");
  }
  CHECK(seen.size() == 3);
  CHECK(next["reviewed"] == 3);
  CHECK(store.progress("s1", "ann")["reviewed"] == 3);
  const auto board = store.leaderboard("s1");
  CHECK(board.models.at("alpha").wins == 3);
  CHECK(board.models.at("beta").losses == 3);

  const auto events = store.events("s1");
  CHECK(events.size() == 6);
  CHECK(events.back().dimension_scores.at("accuracy") == 4);
  CHECK(events.back().comment == "ok");
}

TEST_CASE("the event log replays to the same leaderboard") {
  TempDir dir;
  {
    ReviewStore store(dir.path());
    store.create("s1", make_pairs(4), 1);
    for (const char* reviewer : {"ann", "bob"}) {
      for (int k = 0; k < 3; ++k) {
        const auto id = store.next_pair("s1", reviewer)["pair_id"].get<std::string>();
        store.submit_verdict("s1", id, reviewer, k % 2 ? ReviewVerdict::left : ReviewVerdict::tie);
      }
    }
  }
  const auto replayed = ReviewStore::replay(dir.path(), "s1");
  ReviewStore reopened(dir.path());
  CHECK(reopened.has_session("s1"));
  CHECK(to_json(reopened.leaderboard("s1")) == to_json(replayed));
  CHECK(reopened.progress("s1", "ann")["reviewed"] == 3);
  const auto next = reopened.next_pair("s1", "ann");
  CHECK_FALSE(next.contains("done"));
}

TEST_CASE("concurrent reviewers do not lose events") {
  TempDir dir;
  ReviewStore store(dir.path());
  store.create("s1", make_pairs(20), 4);
  {
    std::vector<std::jthread> threads;
    for (int r = 0; r < 6; ++r) {
      threads.emplace_back([&, r] {
        const auto reviewer = "r" + std::to_string(r);
        for (;;) {
          const auto next = store.next_pair("s1", reviewer);
          if (next.contains("done")) break;
          store.submit_verdict("s1", next["pair_id"].get<std::string>(), reviewer, ReviewVerdict::left);
        }
      });
    }
  }
  CHECK(store.events("s1").size() == 6 * 20 * 2);
  CHECK(read_jsonl(dir / "s1" / "events.jsonl").size() == 6 * 20 * 2);
  CHECK(store.leaderboard("s1").verdicts == 120);
}

TEST_CASE("session json round-trips") {
  const auto s = create_session("s", make_pairs(3), 77);
  const auto back = review_session_from_json(to_json(s));
  CHECK(back.seed == 77);
  CHECK(back.pairs.size() == 3);
  CHECK(back.blinding.at("pair-1").left_model == s.blinding.at("pair-1").left_model);
  CHECK(parse_review_verdict("tie") == ReviewVerdict::tie);
  CHECK_THROWS_AS(parse_review_verdict("maybe"), Error);
}
