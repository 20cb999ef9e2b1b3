// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Blinded pairwise review by human experts: sessions, an append-only event
// log, the human leaderboard and the HTTP service in front of them.
//
// Storage: <data_dir>/<session_id>/session.json holds the pairs and the
// blinding map; <data_dir>/<session_id>/events.jsonl is the event log.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/util.hpp"

namespace httplib {
class Server;
}

namespace ameval {

struct ReviewPair {
  std::string pair_id;
  std::string question;
  std::map<std::string, std::string> answer_by_model;  // exactly two entries
};

struct Blinding {
  std::string left_model;
  std::string right_model;
};

struct ReviewSession {
  std::string session_id;
  std::uint64_t seed = 0;
  std::vector<ReviewPair> pairs;
  std::map<std::string, Blinding> blinding;  // pair_id -> sides

  const ReviewPair& pair(std::string_view pair_id) const;
  std::set<std::string> model_names() const;
};

json to_json(const ReviewSession& s);
ReviewSession review_session_from_json(const json& j);
ReviewPair review_pair_from_json(const json& j);

class ReviewError : public Error {
 public:
  enum class Kind { invalid, not_found, conflict };
  ReviewError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Validates the pairs and draws the left/right assignment of every pair
/// from `seed`. Each pair is an independent fair coin flip.
ReviewSession create_session(std::string session_id, std::vector<ReviewPair> pairs, std::uint64_t seed);

/// Order in which a reviewer is shown the session's pairs (indices into
/// session.pairs), a permutation seeded by the session seed and reviewer id.
std::vector<std::size_t> reviewer_order(const ReviewSession& session, std::string_view reviewer_id);

enum class ReviewVerdict { left, right, tie };
std::string_view to_string(ReviewVerdict v);
ReviewVerdict parse_review_verdict(std::string_view s);

struct ReviewEvent {
  std::string kind;  // "serve" or "verdict"
  std::string timestamp;
  std::string session_id;
  std::string pair_id;
  std::string reviewer_id;
  std::optional<ReviewVerdict> verdict;
  std::map<std::string, double> dimension_scores;
  std::optional<std::string> comment;
};

json to_json(const ReviewEvent& e);
ReviewEvent review_event_from_json(const json& j);

struct ModelTally {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  double win_rate = 0.0;  // wins / (wins + ties + losses)
};

struct HumanLeaderboard {
  std::map<std::string, ModelTally> models;
  std::size_t pairs_decided = 0;
  std::size_t verdicts = 0;  // latest verdict per (pair, reviewer)
};

json to_json(const HumanLeaderboard& b);

/// Latest verdict per (pair, reviewer); plurality per pair with a shared top
/// count counting as a tie; then per-model counts after unblinding. Throws
/// when there are no verdicts.
HumanLeaderboard human_leaderboard(const ReviewSession& session, std::span<const ReviewEvent> events);

/// Blinded payload served to reviewers: pair_id, question, answer_left,
/// answer_right. Model names occurring in the text are redacted.
json blinded_payload(const ReviewSession& session, const ReviewPair& pair);

/// File-backed sessions with an internally synchronized event log.
class ReviewStore {
 public:
  explicit ReviewStore(std::filesystem::path data_dir);
  ~ReviewStore();

  /// Persists a new session. Throws conflict if the id exists.
  const ReviewSession& create(std::string session_id, std::vector<ReviewPair> pairs, std::uint64_t seed);
  bool has_session(std::string_view session_id) const;
  std::vector<std::string> session_ids() const;

  /// Payload of the first pair in the reviewer's order without a verdict
  /// from that reviewer, or {"done": true, ...}. Logs a serve event the first
  /// time a pair is handed to the reviewer.
  json next_pair(std::string_view session_id, std::string_view reviewer_id);

  /// Appends a verdict. Only pairs previously served to the reviewer accept
  /// verdicts. Returns the session's event count.
  std::size_t submit_verdict(std::string_view session_id, std::string_view pair_id, std::string_view reviewer_id,
                             ReviewVerdict verdict, std::map<std::string, double> dimension_scores = {},
                             std::optional<std::string> comment = std::nullopt);

  json progress(std::string_view session_id, std::string_view reviewer_id);
  HumanLeaderboard leaderboard(std::string_view session_id);
  std::vector<ReviewEvent> events(std::string_view session_id);
  const ReviewSession& session(std::string_view session_id);

  /// Reads a session and its log straight from disk, bypassing all state.
  static HumanLeaderboard replay(const std::filesystem::path& data_dir, std::string_view session_id);

 private:
  struct Live;
  Live& live(std::string_view session_id);
  void load(const std::string& session_id);

  std::filesystem::path data_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Live>, std::less<>> sessions_;
};

/// Registers the review endpoints on `server`, plus a static mount at "/"
/// when `static_dir` exists.
void mount_review_routes(httplib::Server& server, ReviewStore& store,
                         const std::optional<std::filesystem::path>& static_dir);

struct ReviewServerConfig {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> static_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  struct SessionSeed {
    std::string session_id;
    std::uint64_t seed = 0;
    std::filesystem::path pairs_path;
  };
  std::vector<SessionSeed> sessions;  // created on start-up unless present
};

ReviewServerConfig load_review_config(const std::filesystem::path& path);

/// Blocks serving until the process is stopped.
void serve_review(const ReviewServerConfig& config);

}  // namespace ameval
