#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragner/corpus.hpp"
#include "ragner/embedder.hpp"
#include "ragner/vector_index.hpp"

namespace ragner {

enum class RetrievalMode { WordLevel, SentenceLevel };

/// How a store example's score is formed from its matching word pairs.
enum class Aggregation {
  Max,        // best single word similarity
  SumOfBest,  // sum over query words of that word's best match in the example
};

struct RetrieverConfig {
  std::size_t k = 5;
  RetrievalMode mode = RetrievalMode::WordLevel;
  std::size_t per_word_k = 0;  // 0: same as k
  Aggregation aggregation = Aggregation::Max;
  std::size_t nprobe = 0;      // IVF only; 0: index default
  bool exclude_self = true;

  std::size_t effective_per_word_k() const noexcept { return per_word_k == 0 ? k : per_word_k; }
  void validate() const;  // throws InvalidArgument
};

struct MatchedPair {
  std::string query_word;
  std::string store_word;
  double similarity = 0.0;

  bool operator==(const MatchedPair&) const = default;
};

struct RetrievedExample {
  SentenceId sentence_id = 0;
  double score = 0.0;
  std::vector<MatchedPair> matched_pairs;  // word mode only, best first

  bool operator==(const RetrievedExample&) const = default;
};

/// Labeled examples plus the word and sentence indexes built over them.
class ExampleStore {
 public:
  /// `word_index` is empty when no example contributed a word record.
  ExampleStore(std::vector<LabeledSentence> examples, std::optional<VectorIndex> word_index,
               VectorIndex sentence_index);

  /// Embeds every example and builds both indexes. Examples that have no
  /// selectable words simply contribute no word records.
  static ExampleStore build(std::vector<LabeledSentence> examples, const Embedder& embedder,
                            const IndexOptions& options, WordSelection store_words,
                            std::size_t parallelism = 1);

  const std::vector<LabeledSentence>& examples() const noexcept { return examples_; }
  const LabeledSentence* find(SentenceId id) const;
  const LabeledSentence& at(SentenceId id) const;  // throws MissingEntry

  const std::optional<VectorIndex>& word_index() const noexcept { return word_index_; }
  const VectorIndex& sentence_index() const noexcept { return sentence_index_; }

  std::size_t word_records_of(SentenceId id) const;
  bool empty() const noexcept { return examples_.empty(); }

 private:
  std::vector<LabeledSentence> examples_;
  std::map<SentenceId, std::size_t> position_;
  std::map<SentenceId, std::size_t> word_record_count_;
  std::optional<VectorIndex> word_index_;
  VectorIndex sentence_index_;
};

/// Pools per-word top hits into at most k unique examples. Exposed so the
/// algorithm can be driven with hand-made query vectors.
std::vector<RetrievedExample> retrieve_word_level(std::span<const WordEmbedding> query_words,
                                                  const ExampleStore& store,
                                                  const RetrieverConfig& cfg,
                                                  std::optional<SentenceId> exclude = std::nullopt);

std::vector<RetrievedExample> retrieve_sentence_level(std::span<const float> query_vector,
                                                      const ExampleStore& store,
                                                      const RetrieverConfig& cfg,
                                                      std::optional<SentenceId> exclude = std::nullopt);

/// Embeds the query and dispatches on cfg.mode.
class Retriever {
 public:
  Retriever(const ExampleStore& store, const Embedder& embedder, RetrieverConfig cfg);

  /// Throws EmptyStore, EmptyQueryAfterStopwords (word mode) and embedder errors.
  std::vector<RetrievedExample> retrieve(const LabeledSentence& query) const;

  const ExampleStore& store() const noexcept { return store_; }
  const RetrieverConfig& config() const noexcept { return cfg_; }

 private:
  const ExampleStore& store_;
  const Embedder& embedder_;
  RetrieverConfig cfg_;
};

nlohmann::json retrieval_to_json(const std::string& query_text,
                                 std::span<const RetrievedExample> examples);

}  // namespace ragner
