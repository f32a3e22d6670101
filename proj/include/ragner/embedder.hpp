#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragner/corpus.hpp"

namespace ragner {

/// One subword token as reported by an encoder. Offsets are Unicode code
/// point positions into the sentence text, end exclusive.
struct TokenVector {
  std::string text;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::vector<float> vector;
};

struct EncodedSentence {
  std::vector<TokenVector> tokens;
  std::vector<float> sentence_vector;
};

/// Source of contextual token vectors. Implementations are read-only after
/// construction and must be callable from several threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EncodedSentence encode(const std::string& text) const = 0;
  virtual std::string describe() const = 0;
};

nlohmann::json encoded_to_json(const std::string& text, const EncodedSentence& encoded);
EncodedSentence encoded_from_json(const nlohmann::json& j);

/// Serves a JSON-lines embedding file: {text, tokens:[{text,start_char,
/// end_char,vector}], sentence_vector} per line. All vectors are
/// L2-normalized at load.
class PrecomputedProvider final : public EmbeddingProvider {
 public:
  static std::shared_ptr<PrecomputedProvider> from_jsonl(std::string_view document);

  EncodedSentence encode(const std::string& text) const override;  // throws MissingEntry
  std::string describe() const override;

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& text) const { return entries_.count(text) != 0; }

 private:
  std::unordered_map<std::string, EncodedSentence> entries_;
};

/// Throws IoError when the file cannot be read, FormatError on bad content.
std::shared_ptr<PrecomputedProvider> load_precomputed(const std::filesystem::path& path);

struct RemoteEmbedderOptions {
  std::string endpoint;  // e.g. http://localhost:8080/embed
  std::string model_name = "bge-base-en";
  std::chrono::milliseconds timeout{10000};
  std::size_t max_retries = 2;
  std::size_t max_in_flight = 4;
  std::string api_key;  // sent as a bearer token when non-empty
};

/// HTTP provider: POST {model, text} and expects {tokens, sentence_vector}.
std::shared_ptr<EmbeddingProvider> make_remote_provider(RemoteEmbedderOptions options);

/// The fixed English stop-word list used when no override file is given.
const std::set<std::string>& default_stopwords();

/// One lowercase word per line; '#' starts a comment.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

enum class ProviderKind { RemoteService, PrecomputedFile };

struct EmbedderSpec {
  ProviderKind provider = ProviderKind::PrecomputedFile;
  std::string model_name = "bge-base-en";
  std::size_t dimension = 768;
  std::set<std::string> stopwords = default_stopwords();
};

enum class WordSelection { All, EntityOnly };

struct WordEmbedding {
  SentenceId sentence_id = 0;
  std::size_t word_index = 0;
  std::string word;
  std::vector<float> vector;  // unit norm
};

struct SentenceEmbedding {
  SentenceId sentence_id = 0;
  std::vector<float> vector;  // unit norm
};

/// Turns provider token vectors into word and sentence vectors.
class Embedder {
 public:
  Embedder(EmbedderSpec spec, std::shared_ptr<const EmbeddingProvider> provider);

  const EmbedderSpec& spec() const noexcept { return spec_; }

  bool is_stopword(std::string_view word) const;

  /// One vector per non-stop-word token (optionally only tokens covered by a
  /// span): the mean of the subword vectors lying inside the word, then
  /// normalized. Throws EmptyInput, DimensionMismatch, AlignmentGap and
  /// whatever the provider throws.
  std::vector<WordEmbedding> embed_words(const LabeledSentence& sentence,
                                         WordSelection selection = WordSelection::All) const;

  SentenceEmbedding embed_sentence(const LabeledSentence& sentence) const;

  /// Both at once, from a single provider call.
  std::pair<std::vector<WordEmbedding>, SentenceEmbedding> embed(
      const LabeledSentence& sentence, WordSelection selection) const;

 private:
  EncodedSentence encode_checked(const LabeledSentence& sentence) const;
  std::vector<WordEmbedding> words_from(const LabeledSentence& sentence,
                                        const EncodedSentence& encoded,
                                        WordSelection selection) const;

  EmbedderSpec spec_;
  std::shared_ptr<const EmbeddingProvider> provider_;
};

/// In-place L2 normalization. Throws FormatError on a zero vector.
void normalize(std::vector<float>& v);

}  // namespace ragner
