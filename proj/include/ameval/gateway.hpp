// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Uniform client for chat-completion endpoints: retry with exponential
// backoff, per-profile rate limiting and bounded-concurrency batches.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ameval/core.hpp"

namespace ameval {

enum class Role { system, user, assistant };
std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

enum class FinishReason { stop, length, error };
std::string_view to_string(FinishReason f);
FinishReason parse_finish_reason(std::string_view s);

struct Completion {
  std::string text;
  std::string model_name;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
  FinishReason finish_reason = FinishReason::stop;
};

enum class GatewayErrorKind { timeout, protocol, malformed, rate_limited, transient };
std::string_view to_string(GatewayErrorKind k);

class GatewayError : public Error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& message, int attempts = 0)
      : Error(message), kind_(kind), attempts_(attempts) {}
  GatewayErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  GatewayErrorKind kind_;
  int attempts_;
};

/// Thrown by a backend for a failure worth retrying (network error, 429,
/// 5xx, timeout, injected mock failure).
class TransientFailure : public Error {
 public:
  explicit TransientFailure(const std::string& message, bool timeout = false)
      : Error(message), timeout_(timeout) {}
  bool is_timeout() const { return timeout_; }

 private:
  bool timeout_;
};

struct WireRequest {
  const ModelProfile& profile;
  std::span<const ChatMessage> messages;
  std::int64_t seed;
  std::string_view request_id;
  int attempt;  // 1-based
};

struct WireReply {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
};

/// One transport to a model. `send` performs exactly one wire attempt and
/// either returns, throws TransientFailure (retryable) or throws
/// GatewayError (final). Implementations must be safe for concurrent use.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual WireReply send(const WireRequest& request) = 0;
};

/// POSTs to {base_url}/chat/completions and returns the first choice.
std::shared_ptr<ModelBackend> make_http_backend();

/// Request body sent to chat-completion endpoints.
json chat_request_body(const ModelProfile& profile, std::span<const ChatMessage> messages,
                       std::int64_t seed);
/// Extracts the first choice from a response body; throws GatewayError
/// (malformed) when the shape is wrong.
WireReply parse_chat_response(std::string_view body);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
};

/// Sliding-window limiter: at most `limit` acquisitions inside any window.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  RateLimiter(int limit, Clock::duration window);

  /// Blocks until a slot is free. Returns false if that would pass `deadline`.
  bool acquire(Clock::time_point deadline);

 private:
  int limit_;
  Clock::duration window_;
  std::mutex mutex_;
  std::deque<Clock::time_point> stamps_;
};

struct GatewayOptions {
  RetryPolicy retry;
  std::chrono::milliseconds rate_window{60000};
};

struct BatchRequest {
  std::string request_id;
  std::vector<ChatMessage> messages;
  std::int64_t seed = 0;
};

struct BatchResult {
  std::string request_id;
  std::variant<Completion, GatewayError> outcome;

  bool ok() const { return std::holds_alternative<Completion>(outcome); }
  const Completion& completion() const { return std::get<Completion>(outcome); }
  const GatewayError& error() const { return std::get<GatewayError>(outcome); }
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});

  Completion complete(const ModelProfile& profile, std::span<const ChatMessage> messages,
                      std::int64_t seed, std::string_view request_id = {});

  /// At most `limit` requests in flight; results are returned in input
  /// order. `on_result` (optional) is invoked as each request finishes,
  /// possibly concurrently from worker threads.
  std::vector<BatchResult> run_batch(
      const ModelProfile& profile, std::span<const BatchRequest> requests, int limit,
      const std::function<void(std::size_t, const BatchResult&)>& on_result = {});

  /// Wire attempts made through this gateway, across all profiles.
  std::uint64_t wire_attempts() const { return wire_attempts_.load(); }

  const GatewayOptions& options() const { return options_; }

 private:
  std::shared_ptr<ModelBackend> backend_for(const ModelProfile& profile);
  RateLimiter& limiter_for(const ModelProfile& profile);

  GatewayOptions options_;
  std::atomic<std::uint64_t> wire_attempts_{0};
  std::mutex mutex_;
  std::shared_ptr<ModelBackend> http_;
  std::map<std::string, std::shared_ptr<ModelBackend>> mocks_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
};

/// Per-request seed: seed_base + a stable 31-bit hash of
/// (item_id, run_index, mode).
std::int64_t derive_seed(std::int64_t seed_base, std::string_view item_id, int run_index,
                         PromptMode mode);

}  // namespace ameval
