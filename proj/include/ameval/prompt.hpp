// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Zero-shot prompt construction and ChatML transcript rendering.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/core.hpp"
#include "ameval/gateway.hpp"

namespace ameval {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Replaces `{name}` for every name in `vars`, in one left-to-right pass.
/// Substituted text is never rescanned; unknown placeholders are kept.
std::string substitute(std::string_view text, const TemplateVars& vars);

class TemplateSet {
 public:
  static TemplateSet parse(std::string_view text);
  static TemplateSet load(const std::filesystem::path& path);
  /// The checked-in templates/prompts.tmpl, embedded at build time.
  static const TemplateSet& defaults();

  bool contains(std::string_view name) const;
  /// Looks up "SUBTASK/NAME" first when a subtask is given, then NAME.
  const std::string& get(std::string_view name, std::string_view subtask = {}) const;
  std::string render(std::string_view name, const TemplateVars& vars,
                     std::string_view subtask = {}) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

/// Ordered special tokens. tokens()[0] opens a turn, tokens()[1] closes it;
/// the rest are reserved and may not appear in content either.
class SpecialTokenSet {
 public:
  explicit SpecialTokenSet(std::vector<std::string> tokens);

  /// ChatML markers plus reserved role/separator tokens, `size` in total.
  static SpecialTokenSet chatml(std::size_t size = 10);

  const std::string& begin() const { return tokens_[0]; }
  const std::string& end() const { return tokens_[1]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// First token occurring verbatim in `text`, if any.
  std::optional<std::string> find_in(std::string_view text) const;

 private:
  std::vector<std::string> tokens_;
};

struct PromptBundle {
  std::string item_id;
  PromptMode mode = PromptMode::PLAIN;
  std::vector<ChatMessage> messages;
};

class PromptError : public Error {
 public:
  using Error::Error;
};

std::string format_choices(const std::vector<Choice>& choices);

PromptBundle build_mcq_prompt(const EvalItem& item, PromptMode mode,
                              const TemplateSet& templates = TemplateSet::defaults(),
                              std::string_view subtask = {});
PromptBundle build_open_prompt(const EvalItem& item,
                               const TemplateSet& templates = TemplateSet::defaults(),
                               std::string_view subtask = {});
/// Dispatches on the item shape: MCQ items need AOT or COT, open items PLAIN.
PromptBundle build_prompt(const EvalItem& item, PromptMode mode,
                          const TemplateSet& templates = TemplateSet::defaults(),
                          std::string_view subtask = {});

std::string render_chatml(const std::vector<ChatMessage>& messages,
                          const SpecialTokenSet& tokens = SpecialTokenSet::chatml());
std::vector<ChatMessage> parse_chatml(std::string_view text,
                                      const SpecialTokenSet& tokens = SpecialTokenSet::chatml());

}  // namespace ameval
