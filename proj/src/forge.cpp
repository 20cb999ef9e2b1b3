// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "ameval/forge.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ameval {

json to_json(const CorpusDoc& d) {
  return json{{"doc_id", d.doc_id}, {"text", d.text}, {"source_tag", d.source_tag}};
}

CorpusDoc corpus_doc_from_json(const json& j) {
  CorpusDoc d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.text = j.at("text").get<std::string>();
  d.source_tag = j.value("source_tag", std::string());
  if (trim(d.text).empty()) throw Error("document \"" + d.doc_id + "\" has empty text");
  return d;
}

std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusDoc> docs;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      docs.push_back(corpus_doc_from_json(j));
    } catch (const std::exception& e) {
      throw Error(fmt::format("{}:{}: {}", path.string(), line, e.what()));
    }
  });
  return docs;
}

std::string_view to_string(CleaningLabel l) {
  switch (l) {
    case CleaningLabel::keep: return "KEEP";
    case CleaningLabel::low_value: return "LOW_VALUE";
    case CleaningLabel::biased: return "BIASED";
    case CleaningLabel::parse_error: return "PARSE_ERROR";
  }
  return "?";
}

std::optional<CleaningLabel> parse_cleaning_label(std::string_view reply) {
  constexpr std::string_view decoration = "*\"'`.";
  auto s = trim(reply);
  while (!s.empty() && decoration.find(s.front()) != std::string_view::npos) s = trim(s.substr(1));
  while (!s.empty() && decoration.find(s.back()) != std::string_view::npos) s = trim(s.substr(0, s.size() - 1));
  for (auto l : {CleaningLabel::keep, CleaningLabel::low_value, CleaningLabel::biased,
                 CleaningLabel::parse_error}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

CleaningResult clean_corpus(Gateway& gateway, const ModelProfile& filter, std::span<const CorpusDoc> docs,
                            const TemplateSet& templates) {
  std::vector<BatchRequest> requests;
  for (const auto& d : docs) {
    requests.push_back({"clean/" + d.doc_id,
                        {ChatMessage{Role::user, templates.render("forge_clean", {{"document", d.text}})}},
                        static_cast<std::int64_t>(fnv1a64(d.doc_id) >> 33)});
  }
  CleaningResult out;
  if (requests.empty()) return out;
  const auto results = gateway.run_batch(filter, requests, filter.max_concurrency);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& r = results[i];
    if (!r.ok()) {
      spdlog::warn("clean_corpus: {}: {}", docs[i].doc_id, r.error().what());
      out.rejected.push_back({docs[i], CleaningLabel::parse_error, true, r.error().what()});
      continue;
    }
    const auto label = parse_cleaning_label(r.completion().text);
    if (!label) {
      out.rejected.push_back({docs[i], CleaningLabel::parse_error, true,
                              "unparseable filter reply: " + r.completion().text});
    } else if (*label == CleaningLabel::keep) {
      out.kept.push_back(docs[i]);
    } else {
      out.rejected.push_back({docs[i], *label, false, {}});
    }
  }
  return out;
}

std::string cleaning_report_csv(std::span<const CorpusDoc> docs, const CleaningResult& result) {
  std::map<std::string, std::string_view> label;
  for (const auto& d : result.kept) label[d.doc_id] = to_string(CleaningLabel::keep);
  for (const auto& r : result.rejected) label[r.doc.doc_id] = to_string(r.label);
  std::string out = "doc_id,label\n";
  for (const auto& d : docs) {
    std::string id = d.doc_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : id) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
      }
      id = q + "\"";
    }
    out += id + "," + std::string(label.at(d.doc_id)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::direct: return "direct";
    case Strategy::with_reference: return "with_reference";
    case Strategy::with_retrieval: return "with_retrieval";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "direct") return Strategy::direct;
  if (s == "with_reference") return Strategy::with_reference;
  if (s == "with_retrieval") return Strategy::with_retrieval;
  throw Error("unknown strategy \"" + std::string(s) + "\"");
}

std::vector<std::string> StaticRetriever::retrieve(std::string_view query) {
  const auto it = passages_.find(query);
  if (it == passages_.end()) return {};
  return it->second;
}

GenerationResult generate_candidates(Gateway& gateway, const ModelProfile& generator,
                                     std::string_view question_id, std::string_view question,
                                     const std::optional<std::string>& material, Retriever* retriever,
                                     const TemplateSet& templates) {
  GenerationResult out;
  auto attempt = [&](Strategy s, const std::function<std::string()>& build) {
    const auto tag = to_string(s);
    try {
      const auto prompt = build();
      const std::string id = fmt::format("forge/{}/{}", question_id, tag);
      const auto c = gateway.complete(generator, std::vector<ChatMessage>{{Role::user, prompt}},
                                      static_cast<std::int64_t>(fnv1a64(id) >> 33), id);
      if (trim(c.text).empty()) throw Error("empty answer");
      out.candidates.push_back({s, c.text, std::nullopt});
    } catch (const std::exception& e) {
      out.warnings.push_back(fmt::format("{}: {} candidate dropped: {}", question_id, tag, e.what()));
      spdlog::warn("{}", out.warnings.back());
    }
  };
  const std::string q(question);
  attempt(Strategy::direct, [&] { return templates.render("forge_direct", {{"question", q}}); });
  if (material && !trim(*material).empty()) {
    attempt(Strategy::with_reference,
            [&] { return templates.render("forge_with_reference", {{"question", q}, {"material", *material}}); });
  }
  if (retriever != nullptr) {
    attempt(Strategy::with_retrieval, [&] {
      const auto passages = retriever->retrieve(question);
      if (passages.empty()) throw Error("retriever returned no passages");
      std::string joined;
      for (std::size_t i = 0; i < passages.size(); ++i) {
        joined += fmt::format("[{}] {}\n", i + 1, passages[i]);
      }
      joined.pop_back();
      return templates.render("forge_with_retrieval", {{"question", q}, {"passages", joined}});
    });
  }
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const SftRecord& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"strategy", to_string(c.strategy)},
                     {"text", c.text},
                     {"judge_score", c.judge_score ? json(*c.judge_score) : json(nullptr)}});
  }
  return json{{"question_id", r.question_id},
              {"question", r.question},
              {"chosen_answer", r.chosen_answer},
              {"chosen_strategy", to_string(r.chosen_strategy)},
              {"candidates", cands},
              {"judge_model", r.judge_model}};
}

SftRecord select_best(Gateway& gateway, const ModelProfile& judge, std::string_view question_id,
                      std::string_view question, std::vector<Candidate> candidates, SelectionMode mode,
                      double threshold, const Rubric& rubric, const TemplateSet& templates) {
  if (candidates.empty()) throw Error(fmt::format("select_best: no candidates for {}", question_id));
  SftRecord rec;
  rec.question_id = std::string(question_id);
  rec.question = std::string(question);

  std::size_t best = 0;
  if (candidates.size() > 1) {
    rec.judge_model = judge.name;
    std::size_t judged = 0;
    if (mode == SelectionMode::absolute) {
      for (auto& c : candidates) {
        const auto id = fmt::format("select/{}/{}", question_id, to_string(c.strategy));
        try {
          c.judge_score = judge_absolute(gateway, judge, id, question, c.text, rubric, templates).verdict.total;
          ++judged;
        } catch (const Error& e) {
          spdlog::warn("select_best: {}: {}", id, e.what());
        }
      }
    } else {
      std::vector<double> points(candidates.size(), 0.0);
      std::vector<bool> ok(candidates.size(), false);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (std::size_t j = i + 1; j < candidates.size(); ++j) {
          const auto id = fmt::format("select/{}/{}-vs-{}", question_id, to_string(candidates[i].strategy),
                                      to_string(candidates[j].strategy));
          try {
            const auto s = judge_pair_swapped(gateway, judge, id, question, candidates[i].text,
                                              candidates[j].text, rubric, templates);
            const auto o = resolve_pair(pair_scores(s.ab, s.ba), threshold);
            points[i] += o.winner == Winner::A ? 1.0 : o.winner == Winner::tie ? 0.5 : 0.0;
            points[j] += o.winner == Winner::B ? 1.0 : o.winner == Winner::tie ? 0.5 : 0.0;
            ok[i] = ok[j] = true;
            ++judged;
          } catch (const Error& e) {
            spdlog::warn("select_best: {}: {}", id, e.what());
          }
        }
      }
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (ok[i]) candidates[i].judge_score = points[i];
      }
    }
    if (judged == 0) throw Error(fmt::format("select_best: every judge call failed for {}", question_id));

    // Order by score desc, then strategy, then input position.
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!candidates[i].judge_score) continue;
      if (!pick) {
        pick = i;
        continue;
      }
      const auto& a = candidates[i];
      const auto& b = candidates[*pick];
      if (*a.judge_score > *b.judge_score ||
          (*a.judge_score == *b.judge_score && a.strategy < b.strategy)) {
        pick = i;
      }
    }
    best = *pick;
  }
  rec.chosen_answer = candidates[best].text;
  rec.chosen_strategy = candidates[best].strategy;
  rec.candidates = std::move(candidates);
  return rec;
}

// ---------------------------------------------------------------------------

std::size_t export_sft(std::span<const SftRecord> records, const std::filesystem::path& path,
                       const SpecialTokenSet& tokens) {
  std::string body;
  for (const auto& r : records) {
    try {
      const auto text = render_chatml({{Role::user, r.question}, {Role::assistant, r.chosen_answer}}, tokens);
      body += json{{"text", text}}.dump() + "\n";
    } catch (const PromptError& e) {
      throw Error(fmt::format("export_sft: record \"{}\": {}", r.question_id, e.what()));
    }
  }
  try {
    write_text_file(path, body);
  } catch (const std::exception& e) {
    throw Error(fmt::format("export_sft: {}", e.what()));
  }
  return records.size();
}

std::vector<SftExchange> import_sft(const std::filesystem::path& path, const SpecialTokenSet& tokens) {
  std::vector<SftExchange> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const auto msgs = parse_chatml(j.at("text").get<std::string>(), tokens);
    if (msgs.size() != 2 || msgs[0].role != Role::user || msgs[1].role != Role::assistant) {
      throw Error(fmt::format("{}:{}: expected one user/assistant exchange", path.string(), line));
    }
    out.push_back({msgs[0].content, msgs[1].content});
  });
  return out;
}

}  // namespace ameval
