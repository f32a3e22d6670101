#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ragner/corpus.hpp"
#include "ragner/ner_output.hpp"

namespace ragner {

using EntityMultiset = std::map<std::pair<std::string, std::string>, std::size_t>;

/// (type, lowercased whitespace-collapsed string) with multiplicities.
EntityMultiset to_multiset(const NerOutput& output);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;

  Counts& operator+=(const Counts& other) noexcept;
  bool operator==(const Counts&) const = default;
};

struct EvalReport {
  Counts micro;
  std::vector<std::pair<std::string, Counts>> per_type;  // schema order
  std::size_t n_sentences = 0;
  std::size_t n_parse_failures = 0;

  double precision() const noexcept { return micro.precision(); }
  double recall() const noexcept { return micro.recall(); }
  double f1() const noexcept { return micro.f1(); }

  bool operator==(const EvalReport&) const = default;
};

struct PredictionRecord {
  SentenceId sentence_id = 0;
  NerOutput gold;
  NerOutput predicted;
  bool parse_failed = false;
};

struct ScoreOptions {
  bool dedupe = false;  // count each distinct (type, string) once per sentence
};

/// Micro counts over multiset matches. Parse failures score all gold items
/// as false negatives. Throws EmptyRecords, SchemaMismatchAcrossRecords.
EvalReport score(std::span<const PredictionRecord> records, const ScoreOptions& options = {});

/// Positional scoring: each predicted string is grounded to the first
/// unused token-aligned occurrence in the sentence and compared with the gold
/// spans by (type, start, end). Strings that do not occur are false positives.
EvalReport score_positional(std::span<const LabeledSentence> sentences,
                            std::span<const PredictionRecord> records, const EntitySchema& schema);

/// Table-style text with percentages to 2 decimals.
std::string format_report(const EvalReport& report, const std::string& title);

nlohmann::json report_to_json(const EvalReport& report);

nlohmann::json prediction_to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& j);

/// Percentage with two decimals, e.g. 0.76974 -> "76.97".
std::string percent(double fraction);

}  // namespace ragner
