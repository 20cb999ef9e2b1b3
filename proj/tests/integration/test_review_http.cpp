// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

#include "ameval/review.hpp"
#include "temp_dir.hpp"

using namespace ameval;
using ameval::testing::TempDir;

namespace {

// Review service on an ephemeral port for the lifetime of the object.
class LiveServer {
 public:
  LiveServer(ReviewStore& store, const std::optional<std::filesystem::path>& static_dir) {
    mount_review_routes(server_, store, static_dir);
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(5, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

json session_body() {
  return {{"session_id", "s1"},
          {"seed", 9},
          {"pairs",
           {{{"pair_id", "p1"}, {"question", "Q1?"}, {"answer_by_model", {{"alpha", "a1"}, {"beta", "b1"}}}},
            {{"pair_id", "p2"}, {"question", "Q2?"}, {"answer_by_model", {{"alpha", "a2"}, {"beta", "b2"}}}}}}};
}

}  // namespace

TEST_CASE("review endpoints over HTTP") {
  TempDir tmp("review-http");
  ReviewStore store(tmp.path() / "data");
  LiveServer live(store, std::nullopt);
  auto cli = live.client();

  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body) == json{{"status", "ok"}});

  auto root = cli.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);
  CHECK(root->body.find("review service") != std::string::npos);

  auto created = cli.Post("/sessions", session_body().dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(json::parse(created->body).at("pairs") == 2);

  auto dup = cli.Post("/sessions", session_body().dump(), "application/json");
  REQUIRE(dup);
  CHECK(dup->status == 409);

  auto bad = cli.Post("/sessions", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  CHECK(cli.Get("/sessions/nope/next?reviewer=r1")->status == 404);
  CHECK(cli.Get("/sessions/s1/next")->status == 400);
  CHECK(cli.Get("/sessions/s1/leaderboard")->status == 409);

  // A verdict for a pair the reviewer was never shown is refused.
  const json early{{"pair_id", "p1"}, {"reviewer_id", "r1"}, {"verdict", "left"}};
  CHECK(cli.Post("/sessions/s1/verdicts", early.dump(), "application/json")->status == 409);

  const auto& session = store.session("s1");
  std::map<std::string, int> alpha_wins;
  for (int i = 0; i < 2; ++i) {
    auto next = cli.Get("/sessions/s1/next?reviewer=r1");
    REQUIRE(next);
    REQUIRE(next->status == 200);
    const auto payload = json::parse(next->body);
    const auto pair_id = payload.at("pair_id").get<std::string>();
    CHECK(payload.contains("answer_left"));
    CHECK(payload.contains("answer_right"));
    CHECK(next->body.find("alpha") == std::string::npos);
    CHECK(next->body.find("beta") == std::string::npos);
    // The reviewer always prefers alpha's answer, wherever it is shown.
    const bool alpha_left = session.blinding.at(pair_id).left_model == "alpha";
    const json v{{"pair_id", pair_id}, {"reviewer_id", "r1"}, {"verdict", alpha_left ? "left" : "right"},
                 {"dimension_scores", {{"accuracy", 8}}}, {"comment", "clearer"}};
    auto posted = cli.Post("/sessions/s1/verdicts", v.dump(), "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 200);
  }

  auto done = cli.Get("/sessions/s1/next?reviewer=r1");
  CHECK(json::parse(done->body).at("done") == true);
  auto progress = cli.Get("/sessions/s1/progress?reviewer=r1");
  CHECK(json::parse(progress->body) == json{{"reviewed", 2}, {"total", 2}});

  const json bad_verdict{{"pair_id", "p1"}, {"reviewer_id", "r1"}, {"verdict", "both"}};
  CHECK(cli.Post("/sessions/s1/verdicts", bad_verdict.dump(), "application/json")->status == 400);

  auto board = cli.Get("/sessions/s1/leaderboard");
  REQUIRE(board);
  CHECK(board->status == 200);
  const auto b = json::parse(board->body);
  CHECK(b.at("models").at("alpha").at("wins") == 2);
  CHECK(b.at("models").at("alpha").at("win_rate") == 1.0);
  CHECK(b.at("models").at("beta").at("losses") == 2);
  CHECK(b.at("pairs_decided") == 2);

  // The on-disk log replays to the same standings.
  CHECK(to_json(ReviewStore::replay(tmp.path() / "data", "s1")) == b);
}

TEST_CASE("static UI bundle is served at the root") {
  TempDir tmp("review-static");
  std::filesystem::create_directories(tmp.path() / "ui");
  std::ofstream(tmp.path() / "ui" / "index.html") << "<html>review</html>";
  ReviewStore store(tmp.path() / "data");
  LiveServer live(store, tmp.path() / "ui");
  auto cli = live.client();
  auto index = cli.Get("/index.html");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body == "<html>review</html>");
  auto root = cli.Get("/");
  REQUIRE(root);
  CHECK(root->body == "<html>review</html>");
  CHECK(cli.Get("/healthz")->status == 200);
}
