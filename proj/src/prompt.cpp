// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/prompt.hpp"

#include <algorithm>

namespace ameval {

namespace detail {
std::string_view default_template_text();
}

std::string substitute(std::string_view text, const TemplateVars& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto name = text.substr(i + 1, close - i - 1);
        if (auto it = vars.find(name); it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

TemplateSet TemplateSet::parse(std::string_view text) {
  TemplateSet set;
  std::optional<std::string> current;
  std::string body;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (!current) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      constexpr std::string_view open = "[[template ";
      if (!t.starts_with(open) || !t.ends_with("]]")) {
        throw Error("template file line " + std::to_string(line_no) + ": expected [[template NAME]]");
      }
      current = std::string(trim(t.substr(open.size(), t.size() - open.size() - 2)));
      body.clear();
      continue;
    }
    if (trim(line) == "[[end]]") {
      if (!body.empty()) body.pop_back();  // newline before [[end]]
      if (!set.templates_.emplace(*current, body).second) {
        throw Error("duplicate template \"" + *current + "\"");
      }
      current.reset();
      continue;
    }
    body.append(line);
    body.push_back('\n');
  }
  if (current) throw Error("template \"" + *current + "\" is missing [[end]]");
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

const TemplateSet& TemplateSet::defaults() {
  static const TemplateSet set = parse(detail::default_template_text());
  return set;
}

bool TemplateSet::contains(std::string_view name) const { return templates_.contains(name); }

const std::string& TemplateSet::get(std::string_view name, std::string_view subtask) const {
  if (!subtask.empty()) {
    std::string scoped(subtask);
    scoped.push_back('/');
    scoped.append(name);
    if (auto it = templates_.find(scoped); it != templates_.end()) return it->second;
  }
  if (auto it = templates_.find(name); it != templates_.end()) return it->second;
  throw Error("no template named \"" + std::string(name) + "\"");
}

std::string TemplateSet::render(std::string_view name, const TemplateVars& vars,
                                std::string_view subtask) const {
  return substitute(get(name, subtask), vars);
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------

SpecialTokenSet::SpecialTokenSet(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2) throw Error("a special token set needs begin and end tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("empty special token");
    for (std::size_t j = 0; j < tokens_.size(); ++j) {
      if (i != j && tokens_[j].find(tokens_[i]) != std::string::npos) {
        throw Error("special token \"" + tokens_[i] + "\" is contained in \"" + tokens_[j] + "\"");
      }
    }
  }
}

SpecialTokenSet SpecialTokenSet::chatml(std::size_t size) {
  std::vector<std::string> tokens{"<|im_start|>", "<|im_end|>", "<|im_sep|>",
                                  "<|system|>",   "<|user|>",   "<|assistant|>"};
  if (size < 2) throw Error("a special token set needs begin and end tokens");
  tokens.resize(std::min(size, tokens.size()));
  for (std::size_t r = 0; tokens.size() < size; ++r) {
    tokens.push_back("<|reserved_" + std::to_string(r) + "|>");
  }
  return SpecialTokenSet(std::move(tokens));
}

std::optional<std::string> SpecialTokenSet::find_in(std::string_view text) const {
  for (const auto& t : tokens_) {
    if (text.find(t) != std::string_view::npos) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string format_choices(const std::vector<Choice>& choices) {
  std::string out;
  for (const auto& c : choices) {
    if (!out.empty()) out.push_back('\n');
    out.push_back(c.label);
    out += ". ";
    out += c.text;
  }
  return out;
}

PromptBundle build_mcq_prompt(const EvalItem& item, PromptMode mode, const TemplateSet& templates,
                              std::string_view subtask) {
  if (!item.is_mcq()) throw PromptError("item \"" + item.item_id + "\" has no choices");
  if (mode == PromptMode::PLAIN) {
    throw PromptError("multiple-choice prompts need AOT or COT mode");
  }
  if (trim(item.prompt).empty()) throw PromptError("item \"" + item.item_id + "\" has an empty question");
  const TemplateVars vars{{"question", item.prompt}, {"choices", format_choices(item.choices)}};
  const char* name = mode == PromptMode::AOT ? "mcq_aot" : "mcq_cot";
  return PromptBundle{item.item_id, mode,
                      {ChatMessage{Role::user, templates.render(name, vars, subtask)}}};
}

PromptBundle build_open_prompt(const EvalItem& item, const TemplateSet& templates,
                               std::string_view subtask) {
  if (item.is_mcq()) throw PromptError("item \"" + item.item_id + "\" is multiple-choice");
  if (trim(item.prompt).empty()) throw PromptError("item \"" + item.item_id + "\" has an empty question");
  TemplateVars vars{{"question", item.prompt}};
  const char* name = "open";
  if (item.reference_material && !item.reference_material->empty()) {
    vars["reference"] = *item.reference_material;
    name = "open_reference";
  }
  return PromptBundle{item.item_id, PromptMode::PLAIN,
                      {ChatMessage{Role::user, templates.render(name, vars, subtask)}}};
}

PromptBundle build_prompt(const EvalItem& item, PromptMode mode, const TemplateSet& templates,
                          std::string_view subtask) {
  if (item.is_mcq()) return build_mcq_prompt(item, mode, templates, subtask);
  if (mode != PromptMode::PLAIN) throw PromptError("open items take PLAIN mode");
  return build_open_prompt(item, templates, subtask);
}

// ---------------------------------------------------------------------------

std::string render_chatml(const std::vector<ChatMessage>& messages, const SpecialTokenSet& tokens) {
  if (messages.empty()) throw PromptError("nothing to render");
  std::string out;
  for (const auto& m : messages) {
    if (auto hit = tokens.find_in(m.content)) {
      throw PromptError("token collision: content contains \"" + *hit + "\"");
    }
    out += tokens.begin();
    out += to_string(m.role);
    out.push_back('\n');
    out += m.content;
    out += tokens.end();
    out.push_back('\n');
  }
  return out;
}

std::vector<ChatMessage> parse_chatml(std::string_view text, const SpecialTokenSet& tokens) {
  std::vector<ChatMessage> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.substr(pos, tokens.begin().size()) != tokens.begin()) {
      throw PromptError("expected " + tokens.begin() + " at offset " + std::to_string(pos));
    }
    pos += tokens.begin().size();
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw PromptError("unterminated role line");
    const Role role = parse_role(text.substr(pos, nl - pos));
    pos = nl + 1;
    const auto end = text.find(tokens.end(), pos);
    if (end == std::string_view::npos) throw PromptError("missing " + tokens.end());
    out.push_back({role, std::string(text.substr(pos, end - pos))});
    pos = end + tokens.end().size();
    if (pos >= text.size() || text[pos] != '\n') throw PromptError("missing newline after turn");
    ++pos;
  }
  if (out.empty()) throw PromptError("empty transcript");
  return out;
}

}  // namespace ameval
