// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/mock.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include <fmt/format.h>

namespace ameval {

MockScript parse_mock_script(const json& doc) {
  MockScript script;
  script.name = doc.value("name", std::string("mock"));
  if (!doc.contains("rules") || !doc["rules"].is_array()) {
    throw Error("mock script needs a \"rules\" list");
  }
  for (const auto& r : doc["rules"]) {
    MockRule rule;
    if (r.contains("contains")) {
      rule.match = MockRule::Match::contains;
      rule.pattern = r["contains"].get<std::string>();
    } else if (r.contains("request_id")) {
      rule.match = MockRule::Match::request_id;
      rule.pattern = r["request_id"].get<std::string>();
    } else {
      rule.match = MockRule::Match::any;
    }
    if (r.contains("responses")) {
      rule.responses = r["responses"].get<std::vector<std::string>>();
    } else if (r.contains("response")) {
      rule.responses.push_back(r["response"].get<std::string>());
    }
    rule.delay = std::chrono::milliseconds(r.value("delay_ms", 0));
    rule.fail_first = r.value("fail_first", 0);
    rule.always_fail = r.value("always_fail", false);
    rule.finish_reason = parse_finish_reason(r.value("finish_reason", std::string("stop")));
    script.rules.push_back(std::move(rule));
  }
  return script;
}

ScriptedMock::ScriptedMock(MockScript script) : script_(std::move(script)) {
  const bool has_catch_all = std::any_of(script_.rules.begin(), script_.rules.end(), [](const auto& r) {
    return r.match == MockRule::Match::any;
  });
  if (!has_catch_all) throw Error("mock script \"" + script_.name + "\" has no catch-all rule");
  for (const auto& r : script_.rules) {
    if (r.responses.empty() && !r.always_fail) {
      throw Error("mock script \"" + script_.name + "\": rule without responses");
    }
    id_patterns_.emplace_back(r.match == MockRule::Match::request_id ? r.pattern : std::string());
  }
}

WireReply ScriptedMock::send(const WireRequest& req) {
  count();
  std::string haystack;
  for (const auto& m : req.messages) {
    haystack += m.content;
    haystack.push_back('\n');
  }
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const auto& rule = script_.rules[i];
    bool hit = false;
    switch (rule.match) {
      case MockRule::Match::any: hit = true; break;
      case MockRule::Match::contains: hit = haystack.find(rule.pattern) != std::string::npos; break;
      case MockRule::Match::request_id:
        hit = std::regex_search(req.request_id.begin(), req.request_id.end(), id_patterns_[i]);
        break;
    }
    if (!hit) continue;
    if (rule.delay.count() > 0) std::this_thread::sleep_for(rule.delay);
    if (rule.always_fail || req.attempt <= rule.fail_first) {
      throw TransientFailure("injected failure (attempt " + std::to_string(req.attempt) + ")");
    }
    const auto idx = static_cast<std::uint64_t>(req.seed) % rule.responses.size();
    return WireReply{rule.responses[idx], rule.finish_reason};
  }
  throw GatewayError(GatewayErrorKind::protocol, "no mock rule matched");
}

JudgeMockConfig parse_judge_mock_config(const json& doc) {
  JudgeMockConfig cfg;
  const auto scoring = doc.value("scoring", std::string("hash"));
  if (scoring == "hash") {
    cfg.scoring = JudgeMockConfig::Scoring::hash;
  } else if (scoring == "length") {
    cfg.scoring = JudgeMockConfig::Scoring::length;
  } else if (scoring == "fixed") {
    cfg.scoring = JudgeMockConfig::Scoring::fixed;
  } else {
    throw Error("unknown judge mock scoring \"" + scoring + "\"");
  }
  cfg.first_slot_bonus = doc.value("first_slot_bonus", 0.0);
  cfg.length_divisor = std::max(1, doc.value("length_divisor", cfg.length_divisor));
  cfg.fixed_score = doc.value("fixed_score", cfg.fixed_score);
  if (doc.contains("dimensions")) cfg.dimensions = doc["dimensions"].get<std::vector<std::string>>();
  return cfg;
}

namespace {

std::optional<std::string> between(const std::string& text, const std::string& open,
                                   const std::string& close) {
  const auto b = text.find(open);
  if (b == std::string::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  if (e == std::string::npos) return std::nullopt;
  return text.substr(start, e - start);
}

}  // namespace

double JudgeMock::base_score(std::string_view answer) const {
  switch (config_.scoring) {
    case JudgeMockConfig::Scoring::hash: return 4.0 + static_cast<double>(fnv1a64(answer) % 5);
    case JudgeMockConfig::Scoring::length:
      return std::min(10.0, std::floor(static_cast<double>(utf8_length(answer)) /
                                       config_.length_divisor));
    case JudgeMockConfig::Scoring::fixed: return config_.fixed_score;
  }
  return 0.0;
}

WireReply JudgeMock::send(const WireRequest& req) {
  count();
  std::string prompt;
  for (const auto& m : req.messages) prompt += m.content + "\n";
  auto block = [&](const std::string& header, double score) {
    std::string out = header + "\n";
    for (const auto& d : config_.dimensions) out += fmt::format("{}: {}\n", d, score);
    out += fmt::format("overall: {}\n", score);
    return out;
  };
  const auto first = between(prompt, "=== Answer 1 ===\n", "\n=== End of Answer 1 ===");
  const auto second = between(prompt, "=== Answer 2 ===\n", "\n=== End of Answer 2 ===");
  if (first && second) {
    const double s1 = std::min(10.0, base_score(*first) + config_.first_slot_bonus);
    const double s2 = base_score(*second);
    return WireReply{"Both answers reviewed.\n" + block("[Answer 1]", s1) + block("[Answer 2]", s2)};
  }
  if (const auto single = between(prompt, "=== Answer ===\n", "\n=== End of Answer ===")) {
    return WireReply{"Reviewed.\n" + block("[Answer]", base_score(*single))};
  }
  return WireReply{"I could not find the answers to grade."};
}

ModelProfile make_backend_profile(std::string name, std::shared_ptr<ModelBackend> backend) {
  ModelProfile p;
  p.name = std::move(name);
  p.base_url = "mock://" + p.name;
  p.temperature = 0.0;
  p.max_concurrency = 64;
  p.requests_per_minute = 1'000'000;
  p.backend = std::move(backend);
  return p;
}

ModelProfile make_mock(MockScript script) {
  auto name = script.name;
  return make_backend_profile(std::move(name), std::make_shared<ScriptedMock>(std::move(script)));
}

ModelProfile make_judge_mock(JudgeMockConfig config, std::string name) {
  return make_backend_profile(std::move(name), std::make_shared<JudgeMock>(std::move(config)));
}

std::shared_ptr<ModelBackend> load_mock_backend(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error("mock script " + path.string() + ": " + e.what());
  }
  const auto type = doc.value("type", std::string("script"));
  if (type == "judge") return std::make_shared<JudgeMock>(parse_judge_mock_config(doc));
  if (type == "script") return std::make_shared<ScriptedMock>(parse_mock_script(doc));
  throw Error("mock script " + path.string() + ": unknown type \"" + type + "\"");
}

}  // namespace ameval
