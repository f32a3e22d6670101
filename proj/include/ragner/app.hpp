#pragma once

// Pipeline commands behind the `ragner` tool. Each command reads the
// artifacts of earlier stages, checks them against the upstream manifest and
// writes its own outputs plus manifests/<command>.json.
//
// Layout under the artifacts dir (paths.store_dir, default paths.output_dir):
//   corpus/{train,dev,test}.jsonl, corpus/schema.json      ingest
//   store/examples.jsonl, store/finetune.jsonl,
//   store/word.idx, store/sentence.idx                      index
// and under paths.output_dir:
//   retrieval.jsonl                                         retrieve
//   finetune.jsonl                                          augment
//   predictions.jsonl, generations.jsonl, latency.json      predict
//   eval/report.json, eval/report.txt                       evaluate
//   ablation/table.txt, ablation/table.json                 ablate

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragner/config.hpp"
#include "ragner/evaluation.hpp"
#include "ragner/generation.hpp"

namespace ragner::app {

/// Ids given to sentences of an ad-hoc --input corpus start here, so they
/// never collide with store ids.
inline constexpr SentenceId kExternalIdBase = 0x80000000u;

std::filesystem::path corpus_file(const RunConfig& config, const std::string& split);
std::filesystem::path manifest_file(const std::filesystem::path& root, const std::string& command);

struct IngestSummary {
  std::map<std::string, std::size_t> sentences;  // per split
  std::size_t dangling_inside_tags = 0;
};
IngestSummary cmd_ingest(const RunConfig& config);

struct IndexSummary {
  std::size_t store_sentences = 0;
  std::size_t finetune_sentences = 0;
  std::size_t word_records = 0;
  std::size_t sentence_records = 0;
  double build_seconds = 0.0;
};
IndexSummary cmd_index(const RunConfig& config);

/// Queries are whitespace-tokenized text; `input` (if set) is a corpus file
/// whose sentences are used as queries instead.
std::size_t cmd_retrieve(const RunConfig& config, const std::vector<std::string>& queries,
                         const std::filesystem::path& input = {});

struct AugmentSummary {
  std::size_t records = 0;
  std::size_t failures = 0;
};
AugmentSummary cmd_augment(const RunConfig& config);

struct PredictSummary {
  std::size_t sentences = 0;
  std::size_t generation_failures = 0;
  std::size_t parse_failures = 0;
  LatencySummary generation;
  LatencySummary search;
};
/// Predicts the ingested test split, or `input` (BIO or sentence JSONL).
PredictSummary cmd_predict(const RunConfig& config, const std::filesystem::path& input = {});

/// Scores `predictions` (default: the predict output). `text` receives the
/// human-readable table.
EvalReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& predictions = {},
                        std::string* text = nullptr);

struct AblationCell {
  std::string domain;
  bool ok = false;
  std::string error;
  EvalReport report;
  double generation_median_s = 0.0;
  double search_median_s = 0.0;
};

struct AblationRow {
  std::string label;
  std::vector<AblationCell> cells;  // one per domain, grid order

  /// Mean F1 over the domains that succeeded; nullopt if any failed.
  std::optional<double> average_f1() const;
};

struct AblationResult {
  std::vector<std::string> domains;
  std::vector<AblationRow> rows;
};

/// Grid document:
///   {"domains": [{"name": "politics", "set": {"paths.train": "...", ...}}, ...],
///    "axes": [{"name": "k", "key": "retriever.k", "values": [1, 3, 5]},
///             {"name": "generator", "values": [{"name": "gold", "set": {...}}, ...]}]}
/// Rows are the cartesian product of the axes, in order. Relative paths in
/// "set" blocks resolve against `grid_dir`.
AblationResult cmd_ablate(const LoadedConfig& base, const nlohmann::json& grid,
                          const std::filesystem::path& grid_dir, std::string* text = nullptr);

std::string format_ablation(const AblationResult& result);
nlohmann::json ablation_to_json(const AblationResult& result);

}  // namespace ragner::app
