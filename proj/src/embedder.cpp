#include "ragner/embedder.hpp"

#include <cmath>
#include <fstream>
#include <semaphore>
#include <thread>

#include "http.hpp"
#include "ragner/error.hpp"
#include "ragner/io.hpp"
#include "ragner/text.hpp"

namespace ragner {

void normalize(std::vector<float>& v) {
  double sq = 0.0;
  for (const float x : v) sq += static_cast<double>(x) * x;
  if (!(sq > 0.0) || !std::isfinite(sq)) throw Error(ErrorCode::FormatError, "cannot normalize a zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

// ---------------------------------------------------------------------------
// JSON record format

nlohmann::json encoded_to_json(const std::string& text, const EncodedSentence& encoded) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : encoded.tokens) {
    tokens.push_back({{"text", t.text}, {"start_char", t.start_char}, {"end_char", t.end_char}, {"vector", t.vector}});
  }
  return {{"text", text}, {"tokens", tokens}, {"sentence_vector", encoded.sentence_vector}};
}

EncodedSentence encoded_from_json(const nlohmann::json& j) {
  try {
    EncodedSentence e;
    for (const auto& t : j.at("tokens")) {
      TokenVector tv;
      tv.text = t.value("text", std::string{});
      tv.start_char = t.at("start_char").get<std::size_t>();
      tv.end_char = t.at("end_char").get<std::size_t>();
      tv.vector = t.at("vector").get<std::vector<float>>();
      e.tokens.push_back(std::move(tv));
    }
    e.sentence_vector = j.at("sentence_vector").get<std::vector<float>>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::FormatError, std::string("bad embedding record: ") + ex.what());
  }
}

namespace {

void normalize_encoded(EncodedSentence& e) {
  for (auto& t : e.tokens) {
    if (t.start_char < t.end_char) normalize(t.vector);
  }
  normalize(e.sentence_vector);
}

}  // namespace

// ---------------------------------------------------------------------------
// precomputed provider

std::shared_ptr<PrecomputedProvider> PrecomputedProvider::from_jsonl(std::string_view document) {
  auto provider = std::shared_ptr<PrecomputedProvider>(new PrecomputedProvider());
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < document.size()) {
    auto nl = document.find('\n', pos);
    if (nl == std::string_view::npos) nl = document.size();
    const auto line = text::trim(document.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, "embedding file line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw Error(ErrorCode::FormatError, "embedding file line " + std::to_string(line_no) + ": missing text");
    }
    auto encoded = encoded_from_json(j);
    normalize_encoded(encoded);
    provider->entries_.insert_or_assign(j["text"].get<std::string>(), std::move(encoded));
  }
  return provider;
}

EncodedSentence PrecomputedProvider::encode(const std::string& text) const {
  const auto it = entries_.find(text);
  if (it == entries_.end()) throw Error(ErrorCode::MissingEntry, "no precomputed embedding for: " + text);
  return it->second;
}

std::string PrecomputedProvider::describe() const {
  return "precomputed-file(" + std::to_string(entries_.size()) + " sentences)";
}

std::shared_ptr<PrecomputedProvider> load_precomputed(const std::filesystem::path& path) {
  return PrecomputedProvider::from_jsonl(io::read_file(path));
}

// ---------------------------------------------------------------------------
// remote provider

namespace {

class RemoteProvider final : public EmbeddingProvider {
 public:
  explicit RemoteProvider(RemoteEmbedderOptions options)
      : options_(std::move(options)), slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight))) {
    if (options_.endpoint.empty()) throw Error(ErrorCode::ConfigError, "remote embedder needs an endpoint");
  }

  EncodedSentence encode(const std::string& text) const override {
    const std::string body = nlohmann::json{{"model", options_.model_name}, {"text", text}}.dump();
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(50 << std::min<std::size_t>(attempt, 5)));
      detail::HttpOutcome outcome;
      {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<>& s;
          ~Release() { s.release(); }
        } release{slots_};
        outcome = detail::post_json(options_.endpoint, body, options_.timeout, options_.api_key);
      }
      if (outcome.failure != detail::HttpFailure::None) {
        last_error = outcome.message;
        continue;
      }
      if (detail::is_transient_status(outcome.response.status)) {
        last_error = "HTTP " + std::to_string(outcome.response.status);
        continue;
      }
      if (outcome.response.status < 200 || outcome.response.status >= 300) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "embedding service returned HTTP " + std::to_string(outcome.response.status));
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(outcome.response.body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("embedding service reply is not JSON: ") + e.what());
      }
      auto encoded = encoded_from_json(j);
      normalize_encoded(encoded);
      return encoded;
    }
    throw Error(ErrorCode::ProviderUnavailable, "embedding service at " + options_.endpoint + " failed after " +
                                                    std::to_string(options_.max_retries + 1) + " attempts: " + last_error);
  }

  std::string describe() const override { return "remote-service(" + options_.endpoint + ")"; }

 private:
  RemoteEmbedderOptions options_;
  mutable std::counting_semaphore<> slots_;
};

}  // namespace

std::shared_ptr<EmbeddingProvider> make_remote_provider(RemoteEmbedderOptions options) {
  return std::make_shared<RemoteProvider>(std::move(options));
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  const auto content = io::read_file(path);
  std::set<std::string> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (!line.empty()) out.insert(text::to_lower(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// embedder

Embedder::Embedder(EmbedderSpec spec, std::shared_ptr<const EmbeddingProvider> provider)
    : spec_(std::move(spec)), provider_(std::move(provider)) {
  if (spec_.dimension == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  if (!provider_) throw Error(ErrorCode::ProviderUnavailable, "no embedding provider configured");
}

bool Embedder::is_stopword(std::string_view word) const {
  return spec_.stopwords.count(text::to_lower(word)) != 0;
}

EncodedSentence Embedder::encode_checked(const LabeledSentence& sentence) const {
  if (sentence.tokens.empty()) throw Error(ErrorCode::EmptyInput, "sentence " + std::to_string(sentence.id) + " has no tokens");
  auto encoded = provider_->encode(sentence.text());
  const auto check = [&](const std::vector<float>& v) {
    if (v.size() != spec_.dimension) {
      throw Error(ErrorCode::DimensionMismatch, "provider returned " + std::to_string(v.size()) +
                                                    "-dim vector, expected " + std::to_string(spec_.dimension));
    }
  };
  for (const auto& t : encoded.tokens) check(t.vector);
  check(encoded.sentence_vector);
  return encoded;
}

std::vector<WordEmbedding> Embedder::words_from(const LabeledSentence& sentence, const EncodedSentence& encoded,
                                                WordSelection selection) const {
  std::vector<bool> selected(sentence.tokens.size(), selection == WordSelection::All);
  if (selection == WordSelection::EntityOnly) {
    for (const auto& span : sentence.spans) {
      for (std::size_t i = span.start; i < span.end && i < selected.size(); ++i) selected[i] = true;
    }
  }

  std::vector<WordEmbedding> out;
  std::size_t word_start = 0;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto& word = sentence.tokens[i];
    const std::size_t word_end = word_start + text::utf8_length(word);
    if (selected[i] && !is_stopword(word)) {
      std::vector<double> sum(spec_.dimension, 0.0);
      std::size_t count = 0;
      for (const auto& t : encoded.tokens) {
        if (t.start_char >= t.end_char) continue;  // special tokens carry empty offsets
        if (t.start_char >= word_start && t.end_char <= word_end) {
          for (std::size_t d = 0; d < spec_.dimension; ++d) sum[d] += t.vector[d];
          ++count;
        }
      }
      if (count == 0) {
        throw Error(ErrorCode::AlignmentGap, "word '" + word + "' in sentence " + std::to_string(sentence.id) +
                                                 " is covered by no subword token");
      }
      WordEmbedding w{sentence.id, i, word, std::vector<float>(spec_.dimension)};
      for (std::size_t d = 0; d < spec_.dimension; ++d) w.vector[d] = static_cast<float>(sum[d] / count);
      normalize(w.vector);
      out.push_back(std::move(w));
    }
    word_start = word_end + 1;  // the joining space
  }
  return out;
}

std::vector<WordEmbedding> Embedder::embed_words(const LabeledSentence& sentence, WordSelection selection) const {
  return words_from(sentence, encode_checked(sentence), selection);
}

SentenceEmbedding Embedder::embed_sentence(const LabeledSentence& sentence) const {
  auto encoded = encode_checked(sentence);
  SentenceEmbedding s{sentence.id, std::move(encoded.sentence_vector)};
  normalize(s.vector);
  return s;
}

std::pair<std::vector<WordEmbedding>, SentenceEmbedding> Embedder::embed(const LabeledSentence& sentence,
                                                                         WordSelection selection) const {
  auto encoded = encode_checked(sentence);
  auto words = words_from(sentence, encoded, selection);
  SentenceEmbedding s{sentence.id, std::move(encoded.sentence_vector)};
  normalize(s.vector);
  return {std::move(words), std::move(s)};
}

}  // namespace ragner
