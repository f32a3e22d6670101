#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ragner/corpus.hpp"
#include "ragner/ner_output.hpp"
#include "ragner/promptkit.hpp"
#include "ragner/retriever.hpp"
#include "ragner/rng.hpp"

namespace ragner {

struct AugmentConfig {
  double dropout_fraction = 0.3;
  std::size_t min_removed = 1;
  std::size_t max_removed = 0;  // 0: |schema| - 1
  double shuffle_fraction = 0.5;
  bool compose = false;  // also shuffle some dropout duplicates
  std::uint64_t seed = 0;

  std::size_t effective_max_removed(std::size_t schema_size) const noexcept {
    return max_removed == 0 ? schema_size - 1 : max_removed;
  }
  void validate(std::size_t schema_size) const;  // throws InvalidArgument / SchemaTooSmall
};

struct TypeDropout {
  EntitySchema schema;
  NerOutput gold;
  std::vector<std::string> removed;  // in original schema order
};

/// Removes r ~ U[min_removed, max_removed] distinct types, chosen uniformly,
/// from both the schema and the gold output. Throws SchemaTooSmall.
TypeDropout drop_entity_types(const NerOutput& gold, const EntitySchema& schema, Rng& rng,
                              const AugmentConfig& cfg);

/// Uniform random permutation; `permutation` (if given) receives the
/// original index of each output position.
EntitySchema shuffle_entity_types(const EntitySchema& schema, Rng& rng,
                                  std::vector<std::size_t>* permutation = nullptr);

struct Provenance {
  SentenceId source = 0;
  bool dropout = false;
  bool shuffled = false;
  std::vector<std::string> removed_types;
  std::vector<std::size_t> permutation;  // indexes into the full schema
  std::vector<SentenceId> example_ids;   // most similar first
};

struct FinetuneRecord {
  std::string prompt;
  std::string completion;
  Provenance provenance;
};

struct AugmentFailure {
  SentenceId sentence_id = 0;
  std::string error;
};

struct FinetuneDataset {
  std::vector<FinetuneRecord> records;
  std::vector<AugmentFailure> failures;  // sentences skipped after an error
};

/// One plain record per finetune sentence, plus one type-dropout duplicate
/// for exactly round(dropout_fraction * N) of them; round(shuffle_fraction * N)
/// plain records get a permuted schema. Subsets and draws come from streams
/// derived from (seed, sentence id), so output does not depend on threading.
FinetuneDataset build_finetune_dataset(std::span<const LabeledSentence> finetune,
                                       const EntitySchema& schema, const Retriever& retriever,
                                       const PromptTemplate& tmpl, const PromptOptions& prompt_options,
                                       const AugmentConfig& cfg, std::size_t parallelism = 1);

nlohmann::json finetune_record_to_json(const FinetuneRecord& record, const std::string& template_id,
                                       std::uint64_t seed);
std::string finetune_to_jsonl(const FinetuneDataset& dataset, const std::string& template_id,
                              std::uint64_t seed);

}  // namespace ragner
