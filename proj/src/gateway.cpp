// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ameval/mock.hpp"

namespace ameval {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

Role parse_role(std::string_view s) {
  for (auto r : {Role::system, Role::user, Role::assistant}) {
    if (to_string(r) == s) return r;
  }
  throw Error("unknown role \"" + std::string(s) + "\"");
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "?";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "length") return FinishReason::length;
  if (s == "error") return FinishReason::error;
  return FinishReason::stop;
}

std::string_view to_string(GatewayErrorKind k) {
  switch (k) {
    case GatewayErrorKind::timeout: return "timeout";
    case GatewayErrorKind::protocol: return "protocol";
    case GatewayErrorKind::malformed: return "malformed";
    case GatewayErrorKind::rate_limited: return "rate_limited";
    case GatewayErrorKind::transient: return "transient";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// HTTP transport

json chat_request_body(const ModelProfile& profile, std::span<const ChatMessage> messages,
                       std::int64_t seed) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return json{{"model", profile.name},
              {"messages", msgs},
              {"temperature", profile.temperature},
              {"max_tokens", profile.max_tokens},
              {"seed", seed}};
}

WireReply parse_chat_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw GatewayError(GatewayErrorKind::malformed,
                       "response is not JSON: " + std::string(body.substr(0, 200)));
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw GatewayError(GatewayErrorKind::malformed,
                       "response has no choices: " + std::string(body.substr(0, 200)));
  }
  const auto& first = (*choices)[0];
  const auto msg = first.find("message");
  if (msg == first.end() || !msg->contains("content") || !(*msg)["content"].is_string()) {
    throw GatewayError(GatewayErrorKind::malformed, "first choice has no message content");
  }
  WireReply reply;
  reply.text = (*msg)["content"].get<std::string>();
  if (auto fr = first.find("finish_reason"); fr != first.end() && fr->is_string()) {
    reply.finish_reason = parse_finish_reason(fr->get<std::string>());
  }
  return reply;
}

namespace {

class HttpBackend final : public ModelBackend {
 public:
  WireReply send(const WireRequest& req) override {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    const std::string& url = req.profile.base_url;
    if (!std::regex_match(url, m, url_re)) {
      throw GatewayError(GatewayErrorKind::protocol, "unsupported base_url \"" + url + "\"");
    }
    std::string path = m[2].matched ? m[2].str() : std::string();
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/chat/completions";

    httplib::Client client(m[1].str());
    const auto timeout = std::chrono::milliseconds(req.profile.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!req.profile.auth_env_var.empty()) {
      if (const char* key = std::getenv(req.profile.auth_env_var.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    const auto body = chat_request_body(req.profile, req.messages, req.seed).dump();
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      throw TransientFailure("transport error: " + httplib::to_string(err), timed_out);
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransientFailure("HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError(GatewayErrorKind::protocol,
                         "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    return parse_chat_response(res->body);
  }
};

void validate_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw Error("empty message list");
  for (const auto& m : messages) {
    if (m.role != Role::system && m.content.empty()) {
      throw Error(std::string(to_string(m.role)) + " message with empty content");
    }
  }
}

}  // namespace

std::shared_ptr<ModelBackend> make_http_backend() { return std::make_shared<HttpBackend>(); }

// ---------------------------------------------------------------------------
// Rate limiting

RateLimiter::RateLimiter(int limit, Clock::duration window) : limit_(limit), window_(window) {
  if (limit < 1) throw Error("rate limit must be positive");
}

bool RateLimiter::acquire(Clock::time_point deadline) {
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = Clock::now();
    while (!stamps_.empty() && stamps_.front() + window_ <= now) stamps_.pop_front();
    if (static_cast<int>(stamps_.size()) < limit_) {
      stamps_.push_back(now);
      return true;
    }
    const auto free_at = stamps_.front() + window_;
    if (free_at > deadline) return false;
    lock.unlock();
    std::this_thread::sleep_until(free_at);
    lock.lock();
  }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayOptions options) : options_(options), http_(make_http_backend()) {}

std::shared_ptr<ModelBackend> Gateway::backend_for(const ModelProfile& profile) {
  if (profile.backend) return profile.backend;
  if (profile.base_url.starts_with("mock:")) {
    const auto path = profile.base_url.substr(5);
    std::lock_guard lock(mutex_);
    auto& slot = mocks_[path];
    if (!slot) slot = load_mock_backend(path);
    return slot;
  }
  return http_;
}

RateLimiter& Gateway::limiter_for(const ModelProfile& profile) {
  std::lock_guard lock(mutex_);
  auto& slot = limiters_[profile.name];
  if (!slot) {
    slot = std::make_unique<RateLimiter>(profile.requests_per_minute, options_.rate_window);
  }
  return *slot;
}

Completion Gateway::complete(const ModelProfile& profile, std::span<const ChatMessage> messages,
                             std::int64_t seed, std::string_view request_id) {
  validate_messages(messages);
  auto backend = backend_for(profile);
  auto& limiter = limiter_for(profile);
  const auto start = std::chrono::steady_clock::now();
  const int max_attempts = std::max(1, options_.retry.max_attempts);
  std::string last_error;
  bool last_timeout = false;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(profile.timeout_ms);
    if (!limiter.acquire(deadline)) {
      throw GatewayError(GatewayErrorKind::rate_limited,
                         "rate limit of " + std::to_string(profile.requests_per_minute) +
                             "/min for \"" + profile.name + "\" not satisfiable before deadline",
                         attempt - 1);
    }
    ++wire_attempts_;
    try {
      WireReply reply = backend->send(WireRequest{profile, messages, seed, request_id, attempt});
      Completion c;
      c.text = std::move(reply.text);
      c.model_name = profile.name;
      c.finish_reason = reply.finish_reason;
      c.attempt_count = attempt;
      c.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      return c;
    } catch (const TransientFailure& e) {
      last_error = e.what();
      last_timeout = e.is_timeout();
    } catch (const GatewayError& e) {
      throw GatewayError(e.kind(), e.what(), attempt);
    }
    if (attempt < max_attempts) {
      const double scale = std::pow(options_.retry.factor, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(
          options_.retry.base_delay * scale));
    }
  }
  throw GatewayError(last_timeout ? GatewayErrorKind::timeout : GatewayErrorKind::transient,
                     "\"" + profile.name + "\" failed after " + std::to_string(max_attempts) +
                         " attempts: " + last_error,
                     max_attempts);
}

std::vector<BatchResult> Gateway::run_batch(
    const ModelProfile& profile, std::span<const BatchRequest> requests, int limit,
    const std::function<void(std::size_t, const BatchResult&)>& on_result) {
  if (limit < 1 || limit > profile.max_concurrency) {
    throw Error("batch limit " + std::to_string(limit) + " outside [1, " +
                std::to_string(profile.max_concurrency) + "] for \"" + profile.name + "\"");
  }
  std::vector<BatchResult> results;
  results.reserve(requests.size());
  for (const auto& r : requests) {
    results.push_back({r.request_id, GatewayError(GatewayErrorKind::transient, "not run")});
  }
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr callback_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      const auto& req = requests[i];
      try {
        results[i].outcome = complete(profile, req.messages, req.seed, req.request_id);
      } catch (const GatewayError& e) {
        results[i].outcome = e;
      } catch (const std::exception& e) {
        results[i].outcome = GatewayError(GatewayErrorKind::protocol, e.what());
      }
      if (!on_result) continue;
      try {
        on_result(i, results[i]);
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!callback_error) callback_error = std::current_exception();
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(limit), requests.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (callback_error) std::rethrow_exception(callback_error);
  return results;
}

std::int64_t derive_seed(std::int64_t seed_base, std::string_view item_id, int run_index,
                         PromptMode mode) {
  std::string key(item_id);
  key.push_back('\x1f');
  key += std::to_string(run_index);
  key.push_back('\x1f');
  key += to_string(mode);
  const std::uint64_t h = fnv1a64(key) >> 33;
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(seed_base) + h);
}

}  // namespace ameval
