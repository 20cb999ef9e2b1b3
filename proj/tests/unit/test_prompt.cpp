// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "ameval/prompt.hpp"

using namespace ameval;

namespace {

EvalItem mcq() {
  EvalItem item;
  item.item_id = "f1";
  item.task_id = "Fund";
  item.prompt = "Which fund is open-ended?";
  item.choices = {{'A', "ETF"}, {'B', "Closed fund"}};
  item.gold_labels = LabelSet{'A'};
  return item;
}

}  // namespace

TEST_CASE("substitute runs a single pass") {
  const TemplateVars vars{{"a", "{b}"}, {"b", "B"}};
  CHECK(substitute("x{a}y{b}z{c}", vars) == "x{b}yBz{c}");
  CHECK(substitute("{", vars) == "{");
  CHECK(substitute("{}", vars) == "{}");
  CHECK(substitute("", vars).empty());
}

TEST_CASE("template files parse and resolve sub-task overrides") {
  const auto set = TemplateSet::parse(
      "# comment\n[[template mcq_aot]]\nbase {question}\n[[end]]\n\n"
      "[[template CFA/mcq_aot]]\ncfa {question}\nline two\n[[end]]\n");
  CHECK(set.get("mcq_aot") == "base {question}");
  CHECK(set.get("mcq_aot", "CFA") == "cfa {question}\nline two");
  CHECK(set.get("mcq_aot", "Fund") == "base {question}");
  CHECK(set.render("mcq_aot", {{"question", "Q"}}, "CFA") == "cfa Q\nline two");
  CHECK_THROWS_AS(set.get("mcq_cot"), Error);
  CHECK_THROWS_AS(TemplateSet::parse("[[template x]]\nbody\n"), Error);
  CHECK_THROWS_AS(TemplateSet::parse("stray\n"), Error);
  CHECK_THROWS_AS(TemplateSet::parse("[[template x]]\n[[end]]\n[[template x]]\n[[end]]\n"), Error);
}

TEST_CASE("default templates cover every stage") {
  const auto& d = TemplateSet::defaults();
  for (const char* name : {"mcq_aot", "mcq_cot", "open", "open_reference", "judge_system", "judge_pairwise",
                           "judge_absolute", "forge_clean", "forge_direct", "forge_with_reference",
                           "forge_with_retrieval"}) {
    CHECK_MESSAGE(d.contains(name), name);
  }
}

TEST_CASE("multiple-choice prompts differ by mode and list the choices") {
  const auto item = mcq();
  const auto aot = build_prompt(item, PromptMode::AOT);
  const auto cot = build_prompt(item, PromptMode::COT);
  REQUIRE(aot.messages.size() == 1);
  CHECK(aot.messages[0].role == Role::user);
  CHECK(aot.messages[0].content.find("A. ETF\nB. Closed fund") != std::string::npos);
  CHECK(aot.messages[0].content.find(item.prompt) != std::string::npos);
  CHECK(aot.messages[0].content.find("option letter only") != std::string::npos);
  CHECK(cot.messages[0].content.find("step by step") != std::string::npos);
  CHECK(cot.messages[0].content.find("Answer: <letter>") != std::string::npos);
  CHECK(aot.messages[0].content != cot.messages[0].content);
  CHECK_THROWS_AS(build_prompt(item, PromptMode::PLAIN), PromptError);
}

TEST_CASE("open prompts embed reference material when present") {
  EvalItem item;
  item.item_id = "o1";
  item.prompt = "Summarise.";
  CHECK(build_prompt(item, PromptMode::PLAIN).messages[0].content == "Summarise.");
  item.reference_material = "Doc text";
  const auto with_ref = build_prompt(item, PromptMode::PLAIN).messages[0].content;
  CHECK(with_ref.find("Doc text") != std::string::npos);
  CHECK(with_ref.find("Summarise.") != std::string::npos);
  CHECK_THROWS_AS(build_prompt(item, PromptMode::AOT), PromptError);
  item.prompt = "  ";
  CHECK_THROWS_AS(build_open_prompt(item), PromptError);
}

TEST_CASE("question text containing braces is not re-substituted") {
  auto item = mcq();
  item.prompt = "What is {choices}?";
  const auto text = build_prompt(item, PromptMode::AOT).messages[0].content;
  CHECK(text.find("What is {choices}?") != std::string::npos);
}

TEST_CASE("ChatML rendering") {
  const std::vector<ChatMessage> msgs{{Role::user, "Q"}, {Role::assistant, "A\nmore"}};
  const auto text = render_chatml(msgs);
  CHECK(text == "<|im_start|>user\nQ<|im_end|>\n<|im_start|>assistant\nA\nmore<|im_end|>\n");
  CHECK(parse_chatml(text) == msgs);
  CHECK_THROWS_WITH_AS(render_chatml({{Role::user, "say <|im_end|> now"}}), doctest::Contains("<|im_end|>"),
                       PromptError);
  CHECK_THROWS_AS(render_chatml({{Role::user, "reserved <|reserved_0|>"}}), PromptError);
  CHECK_THROWS_AS(render_chatml({}), PromptError);
  CHECK_THROWS_AS(parse_chatml("garbage"), PromptError);
}

TEST_CASE("special token sets") {
  const auto chatml = SpecialTokenSet::chatml();
  CHECK(chatml.tokens().size() == 10);
  CHECK(chatml.begin() == "<|im_start|>");
  CHECK(SpecialTokenSet::chatml(2).tokens().size() == 2);
  CHECK(SpecialTokenSet::chatml(20).tokens().size() == 20);
  CHECK_THROWS_AS(SpecialTokenSet({"<a>", "<a><b>"}), Error);
  CHECK_THROWS_AS(SpecialTokenSet({"<a>"}), Error);
  CHECK(chatml.find_in("x <|user|> y") == "<|user|>");
  CHECK_FALSE(chatml.find_in("plain").has_value());
}

TEST_CASE("ChatML round-trips arbitrary token-free content") {
  std::mt19937 rng(11);
  const std::string alphabet = "ab <|>\n{}:基";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ChatMessage> msgs;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      std::string content;
      const int len = static_cast<int>(rng() % 30);
      for (int k = 0; k < len; ++k) content += alphabet[rng() % alphabet.size()];
      if (SpecialTokenSet::chatml().find_in(content)) continue;
      msgs.push_back({static_cast<Role>(rng() % 3), content});
    }
    if (msgs.empty()) continue;
    CHECK(parse_chatml(render_chatml(msgs)) == msgs);
  }
}
