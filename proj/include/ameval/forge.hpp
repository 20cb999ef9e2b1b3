// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

// Training-data pipeline: corpus cleaning with a filter model, multi-strategy
// answer generation, judge-based selection and ChatML export.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ameval/gateway.hpp"
#include "ameval/judge.hpp"
#include "ameval/prompt.hpp"

namespace ameval {

struct CorpusDoc {
  std::string doc_id;
  std::string text;
  std::string source_tag;
};

json to_json(const CorpusDoc& d);
CorpusDoc corpus_doc_from_json(const json& j);
std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path);

enum class CleaningLabel { keep, low_value, biased, parse_error };
std::string_view to_string(CleaningLabel l);

/// Reads the filter's reply: exactly one of KEEP, LOW_VALUE, BIASED,
/// PARSE_ERROR, optionally wrapped in whitespace, quotes or markdown bold.
std::optional<CleaningLabel> parse_cleaning_label(std::string_view reply);

struct RejectedDoc {
  CorpusDoc doc;
  CleaningLabel label = CleaningLabel::parse_error;
  bool unparseable = false;  // the filter reply (or call) failed, not a real verdict
  std::string detail;
};

struct CleaningResult {
  std::vector<CorpusDoc> kept;
  std::vector<RejectedDoc> rejected;
};

CleaningResult clean_corpus(Gateway& gateway, const ModelProfile& filter, std::span<const CorpusDoc> docs,
                            const TemplateSet& templates = TemplateSet::defaults());

/// doc_id,label for every input document, in input order.
std::string cleaning_report_csv(std::span<const CorpusDoc> docs, const CleaningResult& result);

enum class Strategy { direct, with_reference, with_retrieval };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Search backend for the with_retrieval strategy.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<std::string> retrieve(std::string_view query) = 0;
};

/// Retriever backed by a fixed question -> passages map.
class StaticRetriever final : public Retriever {
 public:
  explicit StaticRetriever(std::map<std::string, std::vector<std::string>, std::less<>> passages)
      : passages_(std::move(passages)) {}
  std::vector<std::string> retrieve(std::string_view query) override;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> passages_;
};

struct Candidate {
  Strategy strategy = Strategy::direct;
  std::string text;
  std::optional<double> judge_score;
};

struct GenerationResult {
  std::vector<Candidate> candidates;
  std::vector<std::string> warnings;
};

/// direct always; with_reference when material is given; with_retrieval when
/// a retriever is given. A failing strategy is dropped with a warning.
GenerationResult generate_candidates(Gateway& gateway, const ModelProfile& generator,
                                     std::string_view question_id, std::string_view question,
                                     const std::optional<std::string>& material, Retriever* retriever,
                                     const TemplateSet& templates = TemplateSet::defaults());

enum class SelectionMode { absolute, pairwise_tournament };

struct SftRecord {
  std::string question_id;
  std::string question;
  std::string chosen_answer;
  Strategy chosen_strategy = Strategy::direct;
  std::vector<Candidate> candidates;
  std::string judge_model;  // empty when chosen without judging
};

json to_json(const SftRecord& r);

/// Absolute mode scores every candidate with a single-answer judge prompt
/// and keeps the highest total. Tournament mode plays every pair under the
/// swap protocol and keeps the candidate with the most wins (a tie is half a
/// win). Equal results go to the earlier strategy, then the earlier
/// candidate. A single candidate is returned without calling the judge.
SftRecord select_best(Gateway& gateway, const ModelProfile& judge, std::string_view question_id,
                      std::string_view question, std::vector<Candidate> candidates,
                      SelectionMode mode = SelectionMode::absolute, double threshold = 0.0,
                      const Rubric& rubric = Rubric::standard(),
                      const TemplateSet& templates = TemplateSet::defaults());

/// One {"text": <ChatML user/assistant exchange>} object per line.
std::size_t export_sft(std::span<const SftRecord> records, const std::filesystem::path& path,
                       const SpecialTokenSet& tokens = SpecialTokenSet::chatml());

struct SftExchange {
  std::string question;
  std::string answer;
};

std::vector<SftExchange> import_sft(const std::filesystem::path& path,
                                    const SpecialTokenSet& tokens = SpecialTokenSet::chatml());

}  // namespace ameval
