#pragma once

// Shared test fixtures: a deterministic stand-in encoder, synthetic corpora
// shaped like the CrossNER domains, independent oracles and HTTP stubs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ragner/corpus.hpp"
#include "ragner/embedder.hpp"
#include "ragner/retriever.hpp"
#include "ragner/vector_index.hpp"

namespace ragner::testkit {

/// Directory holding the shipped data files (schemas, templates).
std::filesystem::path data_dir();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// ---- stand-in encoder ----

/// Whitespace words; words of 6+ code points become two subword tokens.
/// Token vector = base(word) + context * (base(prev) + base(next)) + a small
/// per-piece term. Sentence vector = mean of base(word) over all words, so
/// sentences sharing many (stop) words look alike at sentence level.
struct HashedEncoder {
  std::size_t dim = 32;
  std::uint64_t seed = 7;
  float context = 0.15f;
  float piece = 0.1f;

  std::vector<float> base(std::string_view word) const;  // unit norm
  EncodedSentence encode(const std::string& text) const;
};

class HashedProvider final : public EmbeddingProvider {
 public:
  explicit HashedProvider(HashedEncoder encoder) : encoder_(encoder) {}
  EncodedSentence encode(const std::string& text) const override { return encoder_.encode(text); }
  std::string describe() const override { return "hashed"; }

 private:
  HashedEncoder encoder_;
};

/// JSON-lines embedding file covering every distinct sentence text.
std::string precomputed_jsonl(const HashedEncoder& encoder, std::span<const LabeledSentence> sentences);
void write_precomputed(const std::filesystem::path& path, const HashedEncoder& encoder,
                       std::span<const LabeledSentence> sentences);

Embedder hashed_embedder(std::size_t dim, std::uint64_t seed = 7);

// ---- synthetic corpora ----

struct DomainShape {
  std::string name;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// The five target domains with their train/dev/test sentence counts.
const std::vector<DomainShape>& crossner_shapes();

EntitySchema shipped_schema(const std::string& name);

/// Sentences with 0-4 entities each, drawn from per-type name lexicons.
/// Surfaces include punctuation-heavy names (quotes, colons, brackets,
/// commas) so prompt rendering and parsing get exercised.
std::vector<LabeledSentence> synth_sentences(const EntitySchema& schema, std::size_t n, std::uint64_t seed,
                                             SentenceId first_id = 0);

struct SynthDomain {
  EntitySchema schema;
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> dev;
  std::vector<LabeledSentence> test;
};
SynthDomain synth_domain(const DomainShape& shape, std::uint64_t seed);

/// Writes BIO files <dir>/{train,dev,test}.txt.
void write_bio_domain(const std::filesystem::path& dir, const SynthDomain& domain);

// ---- oracles ----

struct OracleHit {
  std::uint32_t id = 0;
  double score = 0.0;
};

/// Exhaustive cosine top-k, computed from raw (unnormalized) vectors.
std::vector<OracleHit> brute_force_topk(const std::vector<std::vector<float>>& data, std::span<const float> query,
                                        std::size_t k);

struct OracleWordRecord {
  SentenceId sentence_id = 0;
  std::vector<float> vector;
};

struct OracleExample {
  SentenceId sentence_id = 0;
  double score = 0.0;
};

/// Scores every (query word, store word) pair, keeps each query word's
/// per_word_k best records outside `exclude`, then pools per example.
std::vector<OracleExample> pooling_oracle(const std::vector<std::vector<float>>& query_words,
                                          const std::vector<OracleWordRecord>& store, std::size_t k,
                                          std::size_t per_word_k, Aggregation aggregation,
                                          std::optional<SentenceId> exclude);

// ---- fixtures ----

/// The "13-inch macbook" query with two store candidates: one sharing most
/// words with the query, one sharing the product word.
struct MacbookFixture {
  EntitySchema schema;
  LabeledSentence query;
  std::vector<LabeledSentence> store;  // [0] table sentence, [1] macbook sentence
  std::string embeddings_jsonl;        // hand-set 8-d vectors
};
MacbookFixture macbook_fixture();

/// Store and test sets where the query's entity only appears in a store
/// sentence with little word overlap, used for the word-vs-sentence ablation.
struct ShopFixture {
  EntitySchema schema;
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> test;
};
ShopFixture shop_fixture();

// ---- HTTP stub ----

/// Localhost JSON endpoint for remote provider/generator tests.
class StubServer {
 public:
  using Handler = std::function<std::pair<int, std::string>(const std::string& body)>;
  explicit StubServer(Handler handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url(const std::string& path = "/v1") const;
  std::size_t requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ragner::testkit
