// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/review.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <regex>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace ameval {

namespace {

void check_session_id(std::string_view id) {
  static const std::regex ok("[A-Za-z0-9_.-]+");
  if (id.empty() || id == "." || id == ".." || !std::regex_match(id.begin(), id.end(), ok)) {
    throw ReviewError(ReviewError::Kind::invalid,
                      "session id \"" + std::string(id) + "\" must use only letters, digits, '_', '.', '-'");
  }
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)),
                     ms.count());
}

std::string redact(std::string text, const std::set<std::string>& names) {
  for (const auto& n : names) {
    if (n.empty()) continue;
    for (auto pos = text.find(n); pos != std::string::npos; pos = text.find(n, pos)) {
      text.replace(pos, n.size(), "[redacted]");
      pos += 10;
    }
  }
  return text;
}

}  // namespace

const ReviewPair& ReviewSession::pair(std::string_view pair_id) const {
  for (const auto& p : pairs) {
    if (p.pair_id == pair_id) return p;
  }
  throw ReviewError(ReviewError::Kind::not_found,
                    fmt::format("session {} has no pair \"{}\"", session_id, pair_id));
}

std::set<std::string> ReviewSession::model_names() const {
  std::set<std::string> out;
  for (const auto& p : pairs) {
    for (const auto& [m, a] : p.answer_by_model) out.insert(m);
  }
  return out;
}

ReviewPair review_pair_from_json(const json& j) {
  ReviewPair p;
  p.pair_id = j.at("pair_id").get<std::string>();
  p.question = j.at("question").get<std::string>();
  p.answer_by_model = j.at("answer_by_model").get<std::map<std::string, std::string>>();
  return p;
}

json to_json(const ReviewSession& s) {
  json pairs = json::array();
  for (const auto& p : s.pairs) {
    const auto& b = s.blinding.at(p.pair_id);
    pairs.push_back({{"pair_id", p.pair_id},
                     {"question", p.question},
                     {"answer_by_model", p.answer_by_model},
                     {"left_model", b.left_model},
                     {"right_model", b.right_model}});
  }
  return json{{"session_id", s.session_id}, {"seed", s.seed}, {"pairs", pairs}};
}

ReviewSession review_session_from_json(const json& j) {
  ReviewSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("pairs")) {
    s.pairs.push_back(review_pair_from_json(p));
    s.blinding[s.pairs.back().pair_id] = {p.at("left_model").get<std::string>(),
                                          p.at("right_model").get<std::string>()};
  }
  return s;
}

ReviewSession create_session(std::string session_id, std::vector<ReviewPair> pairs, std::uint64_t seed) {
  check_session_id(session_id);
  if (pairs.empty()) throw ReviewError(ReviewError::Kind::invalid, "a session needs at least one pair");
  ReviewSession s;
  s.session_id = std::move(session_id);
  s.seed = seed;
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    if (p.answer_by_model.size() != 2) {
      throw ReviewError(ReviewError::Kind::invalid,
                        fmt::format("pair \"{}\" has {} answers; exactly 2 are required", p.pair_id,
                                    p.answer_by_model.size()));
    }
    if (p.pair_id.empty() || !ids.insert(p.pair_id).second) {
      throw ReviewError(ReviewError::Kind::invalid, "empty or duplicate pair id \"" + p.pair_id + "\"");
    }
  }
  s.pairs = std::move(pairs);
  for (const auto& p : s.pairs) {
    for (const auto& m : s.model_names()) {
      if (p.pair_id.find(m) != std::string::npos) {
        throw ReviewError(ReviewError::Kind::invalid,
                          "pair id \"" + p.pair_id + "\" reveals a model name");
      }
    }
  }
  std::mt19937_64 rng(seed);
  for (const auto& p : s.pairs) {
    const auto first = p.answer_by_model.begin()->first;
    const auto second = std::next(p.answer_by_model.begin())->first;
    const bool flip = (rng() >> 63) != 0;
    s.blinding[p.pair_id] = flip ? Blinding{second, first} : Blinding{first, second};
  }
  return s;
}

std::vector<std::size_t> reviewer_order(const ReviewSession& session, std::string_view reviewer_id) {
  std::vector<std::size_t> order(session.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(session.seed ^ fnv1a64(reviewer_id));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  return order;
}

std::string_view to_string(ReviewVerdict v) {
  switch (v) {
    case ReviewVerdict::left: return "left";
    case ReviewVerdict::right: return "right";
    case ReviewVerdict::tie: return "tie";
  }
  return "?";
}

ReviewVerdict parse_review_verdict(std::string_view s) {
  if (s == "left") return ReviewVerdict::left;
  if (s == "right") return ReviewVerdict::right;
  if (s == "tie") return ReviewVerdict::tie;
  throw ReviewError(ReviewError::Kind::invalid, "verdict must be left, right or tie");
}

json to_json(const ReviewEvent& e) {
  json j{{"kind", e.kind},
         {"timestamp", e.timestamp},
         {"session_id", e.session_id},
         {"pair_id", e.pair_id},
         {"reviewer_id", e.reviewer_id}};
  if (e.verdict) j["verdict"] = to_string(*e.verdict);
  if (!e.dimension_scores.empty()) j["dimension_scores"] = e.dimension_scores;
  if (e.comment) j["comment"] = *e.comment;
  return j;
}

ReviewEvent review_event_from_json(const json& j) {
  ReviewEvent e;
  e.kind = j.at("kind").get<std::string>();
  e.timestamp = j.value("timestamp", std::string());
  e.session_id = j.at("session_id").get<std::string>();
  e.pair_id = j.at("pair_id").get<std::string>();
  e.reviewer_id = j.at("reviewer_id").get<std::string>();
  if (j.contains("verdict")) e.verdict = parse_review_verdict(j["verdict"].get<std::string>());
  if (j.contains("dimension_scores")) e.dimension_scores = j["dimension_scores"].get<std::map<std::string, double>>();
  if (j.contains("comment")) e.comment = j["comment"].get<std::string>();
  return e;
}

json to_json(const HumanLeaderboard& b) {
  json models = json::object();
  for (const auto& [name, t] : b.models) {
    models[name] = {{"wins", t.wins}, {"ties", t.ties}, {"losses", t.losses}, {"win_rate", t.win_rate}};
  }
  return json{{"models", models}, {"pairs_decided", b.pairs_decided}, {"verdicts", b.verdicts}};
}

HumanLeaderboard human_leaderboard(const ReviewSession& session, std::span<const ReviewEvent> events) {
  // pair_id -> reviewer -> latest verdict
  std::map<std::string, std::map<std::string, ReviewVerdict>> latest;
  for (const auto& e : events) {
    if (e.kind != "verdict" || !e.verdict) continue;
    latest[e.pair_id][e.reviewer_id] = *e.verdict;
  }
  HumanLeaderboard board;
  for (const auto& m : session.model_names()) board.models[m];
  for (const auto& [pair_id, by_reviewer] : latest) {
    int counts[3] = {0, 0, 0};
    for (const auto& [r, v] : by_reviewer) ++counts[static_cast<int>(v)];
    board.verdicts += by_reviewer.size();
    const int top = std::max({counts[0], counts[1], counts[2]});
    const int n_top = (counts[0] == top) + (counts[1] == top) + (counts[2] == top);
    ReviewVerdict outcome = ReviewVerdict::tie;
    if (n_top == 1) {
      outcome = counts[0] == top ? ReviewVerdict::left : counts[1] == top ? ReviewVerdict::right : ReviewVerdict::tie;
    }
    const auto& b = session.blinding.at(pair_id);
    auto& left = board.models[b.left_model];
    auto& right = board.models[b.right_model];
    switch (outcome) {
      case ReviewVerdict::left: ++left.wins; ++right.losses; break;
      case ReviewVerdict::right: ++right.wins; ++left.losses; break;
      case ReviewVerdict::tie: ++left.ties; ++right.ties; break;
    }
    ++board.pairs_decided;
  }
  if (board.verdicts == 0) {
    throw ReviewError(ReviewError::Kind::conflict, "session " + session.session_id + " has no verdicts yet");
  }
  for (auto& [name, t] : board.models) {
    const int games = t.wins + t.ties + t.losses;
    t.win_rate = games > 0 ? static_cast<double>(t.wins) / games : 0.0;
  }
  return board;
}

json blinded_payload(const ReviewSession& session, const ReviewPair& pair) {
  const auto names = session.model_names();
  const auto& b = session.blinding.at(pair.pair_id);
  return json{{"pair_id", pair.pair_id},
              {"question", redact(pair.question, names)},
              {"answer_left", redact(pair.answer_by_model.at(b.left_model), names)},
              {"answer_right", redact(pair.answer_by_model.at(b.right_model), names)}};
}

// ---------------------------------------------------------------------------
// Store

struct ReviewStore::Live {
  ReviewSession session;
  std::mutex mutex;
  std::vector<ReviewEvent> events;
  std::map<std::string, std::set<std::string>> served;    // reviewer -> pair ids
  std::map<std::string, std::set<std::string>> reviewed;  // reviewer -> pair ids
  std::unique_ptr<JsonlAppender> log;

  void apply(const ReviewEvent& e) {
    events.push_back(e);
    if (e.kind == "serve") served[e.reviewer_id].insert(e.pair_id);
    if (e.kind == "verdict") reviewed[e.reviewer_id].insert(e.pair_id);
  }

  void append(ReviewEvent e) {
    log->append(to_json(e));
    apply(std::move(e));
  }
};

ReviewStore::ReviewStore(fs::path data_dir) : data_dir_(std::move(data_dir)) {
  fs::create_directories(data_dir_);
  for (const auto& entry : fs::directory_iterator(data_dir_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) load(entry.path().filename().string());
  }
}

ReviewStore::~ReviewStore() = default;

void ReviewStore::load(const std::string& session_id) {
  auto live = std::make_unique<Live>();
  const auto dir = data_dir_ / session_id;
  live->session = review_session_from_json(json::parse(read_text_file(dir / "session.json")));
  if (fs::exists(dir / "events.jsonl")) {
    for_each_jsonl(dir / "events.jsonl", [&](const json& j, std::size_t) { live->apply(review_event_from_json(j)); });
  }
  live->log = std::make_unique<JsonlAppender>(dir / "events.jsonl");
  sessions_[session_id] = std::move(live);
}

const ReviewSession& ReviewStore::create(std::string session_id, std::vector<ReviewPair> pairs, std::uint64_t seed) {
  auto session = create_session(std::move(session_id), std::move(pairs), seed);
  std::lock_guard lock(mutex_);
  if (sessions_.contains(session.session_id) || fs::exists(data_dir_ / session.session_id)) {
    throw ReviewError(ReviewError::Kind::conflict, "session " + session.session_id + " already exists");
  }
  const auto dir = data_dir_ / session.session_id;
  write_text_file(dir / "session.json", to_json(session).dump(2) + "\n");
  auto live = std::make_unique<Live>();
  live->session = std::move(session);
  live->log = std::make_unique<JsonlAppender>(dir / "events.jsonl");
  auto& ref = *live;
  sessions_[ref.session.session_id] = std::move(live);
  return ref.session;
}

bool ReviewStore::has_session(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return sessions_.find(id) != sessions_.end();
}

std::vector<std::string> ReviewStore::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

ReviewStore::Live& ReviewStore::live(std::string_view id) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ReviewError(ReviewError::Kind::not_found, "unknown session \"" + std::string(id) + "\"");
  return *it->second;
}

const ReviewSession& ReviewStore::session(std::string_view id) { return live(id).session; }

namespace {

void check_reviewer(std::string_view reviewer) {
  if (trim(reviewer).empty()) throw ReviewError(ReviewError::Kind::invalid, "reviewer id is required");
}

}  // namespace

json ReviewStore::next_pair(std::string_view session_id, std::string_view reviewer_id) {
  check_reviewer(reviewer_id);
  auto& l = live(session_id);
  std::lock_guard lock(l.mutex);
  const std::string reviewer(reviewer_id);
  const auto& done = l.reviewed[reviewer];
  for (const auto i : reviewer_order(l.session, reviewer)) {
    const auto& p = l.session.pairs[i];
    if (done.contains(p.pair_id)) continue;
    if (!l.served[reviewer].contains(p.pair_id)) {
      l.append({"serve", now_iso8601(), l.session.session_id, p.pair_id, reviewer, std::nullopt, {}, std::nullopt});
    }
    return blinded_payload(l.session, p);
  }
  return json{{"done", true}, {"reviewed", done.size()}, {"total", l.session.pairs.size()}};
}

std::size_t ReviewStore::submit_verdict(std::string_view session_id, std::string_view pair_id,
                                        std::string_view reviewer_id, ReviewVerdict verdict,
                                        std::map<std::string, double> dimension_scores,
                                        std::optional<std::string> comment) {
  check_reviewer(reviewer_id);
  auto& l = live(session_id);
  std::lock_guard lock(l.mutex);
  const auto& p = l.session.pair(pair_id);
  const std::string reviewer(reviewer_id);
  if (!l.served[reviewer].contains(p.pair_id)) {
    throw ReviewError(ReviewError::Kind::conflict,
                      fmt::format("pair \"{}\" was never served to reviewer \"{}\"", pair_id, reviewer_id));
  }
  l.append({"verdict", now_iso8601(), l.session.session_id, p.pair_id, reviewer, verdict,
            std::move(dimension_scores), std::move(comment)});
  return l.events.size();
}

json ReviewStore::progress(std::string_view session_id, std::string_view reviewer_id) {
  check_reviewer(reviewer_id);
  auto& l = live(session_id);
  std::lock_guard lock(l.mutex);
  return json{{"reviewed", l.reviewed[std::string(reviewer_id)].size()}, {"total", l.session.pairs.size()}};
}

HumanLeaderboard ReviewStore::leaderboard(std::string_view session_id) {
  auto& l = live(session_id);
  std::lock_guard lock(l.mutex);
  return human_leaderboard(l.session, l.events);
}

std::vector<ReviewEvent> ReviewStore::events(std::string_view session_id) {
  auto& l = live(session_id);
  std::lock_guard lock(l.mutex);
  return l.events;
}

HumanLeaderboard ReviewStore::replay(const fs::path& data_dir, std::string_view session_id) {
  const auto dir = data_dir / std::string(session_id);
  const auto session = review_session_from_json(json::parse(read_text_file(dir / "session.json")));
  std::vector<ReviewEvent> events;
  if (fs::exists(dir / "events.jsonl")) {
    for_each_jsonl(dir / "events.jsonl", [&](const json& j, std::size_t) { events.push_back(review_event_from_json(j)); });
  }
  return human_leaderboard(session, events);
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& fn) {
  try {
    fn();
  } catch (const ReviewError& e) {
    const int status = e.kind() == ReviewError::Kind::not_found  ? 404
                       : e.kind() == ReviewError::Kind::conflict ? 409
                                                                 : 400;
    reply_json(res, status, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::exception& e) {
    spdlog::error("review service: {}", e.what());
    reply_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

void mount_review_routes(httplib::Server& server, ReviewStore& store,
                         const std::optional<fs::path>& static_dir) {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, {{"status", "ok"}});
  });
  server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      std::vector<ReviewPair> pairs;
      for (const auto& p : body.at("pairs")) pairs.push_back(review_pair_from_json(p));
      const auto& s = store.create(body.at("session_id").get<std::string>(), std::move(pairs),
                                   body.value("seed", std::uint64_t{0}));
      reply_json(res, 201, {{"session_id", s.session_id}, {"pairs", s.pairs.size()}});
    });
  });
  server.Get(R"(/sessions/([^/]+)/next)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply_json(res, 200, store.next_pair(req.matches[1].str(), req.get_param_value("reviewer"))); });
  });
  server.Get(R"(/sessions/([^/]+)/progress)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply_json(res, 200, store.progress(req.matches[1].str(), req.get_param_value("reviewer"))); });
  });
  server.Post(R"(/sessions/([^/]+)/verdicts)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      std::map<std::string, double> dims;
      if (body.contains("dimension_scores")) dims = body["dimension_scores"].get<std::map<std::string, double>>();
      std::optional<std::string> comment;
      if (body.contains("comment") && !body["comment"].is_null()) comment = body["comment"].get<std::string>();
      const auto n = store.submit_verdict(req.matches[1].str(), body.at("pair_id").get<std::string>(),
                                          body.at("reviewer_id").get<std::string>(),
                                          parse_review_verdict(body.at("verdict").get<std::string>()), std::move(dims),
                                          std::move(comment));
      reply_json(res, 200, {{"ok", true}, {"events", n}});
    });
  });
  server.Get(R"(/sessions/([^/]+)/leaderboard)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply_json(res, 200, to_json(store.leaderboard(req.matches[1].str()))); });
  });
  if (static_dir && fs::is_directory(*static_dir)) {
    server.set_mount_point("/", static_dir->string());
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ameval review service. No UI bundle is installed; configure static_dir.\n", "text/plain");
    });
  }
}

ReviewServerConfig load_review_config(const fs::path& path) {
  const auto doc = json::parse(read_text_file(path));
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path r(p);
    return r.is_relative() ? (base / r).lexically_normal() : r;
  };
  ReviewServerConfig cfg;
  cfg.data_dir = resolve(doc.at("data_dir").get<std::string>());
  if (doc.contains("static_dir") && !doc["static_dir"].is_null()) cfg.static_dir = resolve(doc["static_dir"].get<std::string>());
  cfg.host = doc.value("host", cfg.host);
  cfg.port = doc.value("port", cfg.port);
  for (const auto& s : doc.value("sessions", json::array())) {
    cfg.sessions.push_back({s.at("session_id").get<std::string>(), s.value("seed", std::uint64_t{0}),
                            resolve(s.at("pairs").get<std::string>())});
  }
  return cfg;
}

void serve_review(const ReviewServerConfig& config) {
  ReviewStore store(config.data_dir);
  for (const auto& s : config.sessions) {
    if (store.has_session(s.session_id)) continue;
    std::vector<ReviewPair> pairs;
    for (const auto& j : read_jsonl(s.pairs_path)) pairs.push_back(review_pair_from_json(j));
    store.create(s.session_id, std::move(pairs), s.seed);
    spdlog::info("created review session {} ({} pairs)", s.session_id, store.session(s.session_id).pairs.size());
  }
  httplib::Server server;
  mount_review_routes(server, store, config.static_dir);
  spdlog::info("review service listening on {}:{}", config.host, config.port);
  if (!server.listen(config.host, config.port)) {
    throw Error(fmt::format("cannot listen on {}:{}", config.host, config.port));
  }
}

}  // namespace ameval
