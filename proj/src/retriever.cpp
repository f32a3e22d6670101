#include "ragner/retriever.hpp"

#include <algorithm>
#include <set>

#include "ragner/error.hpp"
#include "ragner/parallel.hpp"

namespace ragner {

void RetrieverConfig::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
}

ExampleStore::ExampleStore(std::vector<LabeledSentence> examples, std::optional<VectorIndex> word_index,
                           VectorIndex sentence_index)
    : examples_(std::move(examples)), word_index_(std::move(word_index)), sentence_index_(std::move(sentence_index)) {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    if (!position_.emplace(examples_[i].id, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate sentence id " + std::to_string(examples_[i].id) + " in store");
    }
  }
  if (word_index_) {
    const auto& records = word_index_->records();
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (!position_.count(records.sentence_id(r))) {
        throw Error(ErrorCode::InvalidArgument, "word record " + std::to_string(r) + " points at unknown sentence");
      }
      ++word_record_count_[records.sentence_id(r)];
    }
  }
  const auto& sent = sentence_index_.records();
  for (std::size_t r = 0; r < sent.size(); ++r) {
    if (!position_.count(sent.sentence_id(r))) {
      throw Error(ErrorCode::InvalidArgument, "sentence record " + std::to_string(r) + " points at unknown sentence");
    }
  }
}

ExampleStore ExampleStore::build(std::vector<LabeledSentence> examples, const Embedder& embedder,
                                 const IndexOptions& options, WordSelection store_words, std::size_t parallelism) {
  if (examples.empty()) throw Error(ErrorCode::EmptyStore, "no examples to store");
  std::vector<std::pair<std::vector<WordEmbedding>, SentenceEmbedding>> embedded(examples.size());
  parallel_for(examples.size(), parallelism,
               [&](std::size_t i) { embedded[i] = embedder.embed(examples[i], store_words); });

  std::vector<WordRecord> word_records;
  std::vector<WordRecord> sentence_records;
  sentence_records.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& [words, sentence] = embedded[i];
    for (auto& w : words) {
      word_records.push_back({static_cast<std::uint32_t>(word_records.size()), std::move(w.word), std::move(w.vector),
                              examples[i].id});
    }
    sentence_records.push_back({static_cast<std::uint32_t>(i), examples[i].text(), std::move(sentence.vector),
                                examples[i].id});
  }
  std::optional<VectorIndex> word_index;
  if (!word_records.empty()) word_index.emplace(build_index(std::move(word_records), options));
  auto sentence_index = build_index(std::move(sentence_records), options);
  return ExampleStore(std::move(examples), std::move(word_index), std::move(sentence_index));
}

const LabeledSentence* ExampleStore::find(SentenceId id) const {
  const auto it = position_.find(id);
  return it == position_.end() ? nullptr : &examples_[it->second];
}

const LabeledSentence& ExampleStore::at(SentenceId id) const {
  const auto* s = find(id);
  if (!s) throw Error(ErrorCode::MissingEntry, "sentence " + std::to_string(id) + " is not in the store");
  return *s;
}

std::size_t ExampleStore::word_records_of(SentenceId id) const {
  const auto it = word_record_count_.find(id);
  return it == word_record_count_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------

namespace {

struct PooledPair {
  MatchedPair pair;
  std::size_t query_index = 0;
  std::uint32_t record_id = 0;
};

std::vector<RetrievedExample> rank_examples(std::vector<RetrievedExample> pooled, std::size_t k) {
  std::sort(pooled.begin(), pooled.end(), [](const RetrievedExample& a, const RetrievedExample& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.sentence_id < b.sentence_id;
  });
  if (pooled.size() > k) pooled.resize(k);
  return pooled;
}

}  // namespace

std::vector<RetrievedExample> retrieve_word_level(std::span<const WordEmbedding> query_words, const ExampleStore& store,
                                                  const RetrieverConfig& cfg, std::optional<SentenceId> exclude) {
  cfg.validate();
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "the example store is empty");
  if (query_words.empty()) throw Error(ErrorCode::EmptyQueryAfterStopwords, "query has no words left after stop-word removal");
  if (!store.word_index()) return {};

  const auto& index = *store.word_index();
  const auto& records = index.records();
  const std::size_t per_word = cfg.effective_per_word_k();
  const std::size_t self_records = exclude ? store.word_records_of(*exclude) : 0;

  std::map<SentenceId, std::vector<PooledPair>> pool;
  for (std::size_t qi = 0; qi < query_words.size(); ++qi) {
    const auto& qw = query_words[qi];
    auto hits = index.search(qw.vector, per_word + self_records, cfg.nprobe);
    std::size_t kept = 0;
    for (const auto& hit : hits) {
      const SentenceId sid = records.sentence_id(hit.record_id);
      if (exclude && sid == *exclude) continue;
      if (kept++ == per_word) break;
      pool[sid].push_back({{qw.word, records.word(hit.record_id), hit.score}, qi, hit.record_id});
    }
  }

  std::vector<RetrievedExample> examples;
  examples.reserve(pool.size());
  for (auto& [sid, pairs] : pool) {
    std::sort(pairs.begin(), pairs.end(), [](const PooledPair& a, const PooledPair& b) {
      if (a.pair.similarity != b.pair.similarity) return a.pair.similarity > b.pair.similarity;
      if (a.query_index != b.query_index) return a.query_index < b.query_index;
      return a.record_id < b.record_id;
    });
    RetrievedExample ex;
    ex.sentence_id = sid;
    if (cfg.aggregation == Aggregation::Max) {
      ex.score = pairs.front().pair.similarity;
    } else {
      std::set<std::size_t> counted;
      double sum = 0.0;
      for (const auto& p : pairs) {  // best-first, so the first hit per query word is its best
        if (counted.insert(p.query_index).second) sum += p.pair.similarity;
      }
      ex.score = sum;
    }
    ex.matched_pairs.reserve(pairs.size());
    for (auto& p : pairs) ex.matched_pairs.push_back(std::move(p.pair));
    examples.push_back(std::move(ex));
  }
  return rank_examples(std::move(examples), cfg.k);
}

std::vector<RetrievedExample> retrieve_sentence_level(std::span<const float> query_vector, const ExampleStore& store,
                                                      const RetrieverConfig& cfg, std::optional<SentenceId> exclude) {
  cfg.validate();
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "the example store is empty");
  const auto& index = store.sentence_index();
  const bool has_self = exclude && store.find(*exclude);
  const auto hits = index.search(query_vector, cfg.k + (has_self ? 1 : 0), cfg.nprobe);
  std::vector<RetrievedExample> out;
  for (const auto& hit : hits) {
    const SentenceId sid = index.records().sentence_id(hit.record_id);
    if (has_self && sid == *exclude) continue;
    if (out.size() == cfg.k) break;
    out.push_back({sid, hit.score, {}});
  }
  return rank_examples(std::move(out), cfg.k);
}

Retriever::Retriever(const ExampleStore& store, const Embedder& embedder, RetrieverConfig cfg)
    : store_(store), embedder_(embedder), cfg_(cfg) {
  cfg_.validate();
}

std::vector<RetrievedExample> Retriever::retrieve(const LabeledSentence& query) const {
  if (store_.empty()) throw Error(ErrorCode::EmptyStore, "the example store is empty");
  std::optional<SentenceId> exclude;
  if (cfg_.exclude_self && query.id != kNoSentence && store_.find(query.id)) exclude = query.id;
  if (cfg_.mode == RetrievalMode::WordLevel) {
    const auto words = embedder_.embed_words(query, WordSelection::All);
    return retrieve_word_level(words, store_, cfg_, exclude);
  }
  const auto sentence = embedder_.embed_sentence(query);
  return retrieve_sentence_level(sentence.vector, store_, cfg_, exclude);
}

nlohmann::json retrieval_to_json(const std::string& query_text, std::span<const RetrievedExample> examples) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& ex : examples) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : ex.matched_pairs) pairs.push_back({p.query_word, p.store_word, p.similarity});
    list.push_back({{"sentence_id", ex.sentence_id}, {"score", ex.score}, {"matched_pairs", pairs}});
  }
  return {{"query_text", query_text}, {"examples", list}};
}

}  // namespace ragner
