#include "support.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "ragner/io.hpp"
#include "ragner/rng.hpp"
#include "ragner/text.hpp"

#ifndef RAGNER_DATA_DIR
#error "RAGNER_DATA_DIR must point at the data/ directory"
#endif

namespace ragner::testkit {

namespace fs = std::filesystem;

fs::path data_dir() { return RAGNER_DATA_DIR; }

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ragner-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- encoder ----

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

struct WordPos {
  std::string text;
  std::size_t byte_start = 0;
  std::size_t cp_start = 0;
  std::size_t cp_len = 0;
};

std::vector<WordPos> words_of(const std::string& s) {
  std::vector<WordPos> out;
  std::size_t cp = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_ascii_space(s[i])) {
      ++i;
      ++cp;
      continue;
    }
    WordPos w;
    w.byte_start = i;
    w.cp_start = cp;
    while (i < s.size() && !is_ascii_space(s[i])) {
      if (!is_continuation(static_cast<unsigned char>(s[i]))) ++cp;
      ++i;
    }
    w.text = s.substr(w.byte_start, i - w.byte_start);
    w.cp_len = cp - w.cp_start;
    out.push_back(std::move(w));
  }
  return out;
}

/// Byte offset of code point `n` within `s`.
std::size_t byte_of_cp(const std::string& s, std::size_t n) {
  std::size_t cp = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (cp == n) return i;
    ++cp;
  }
  return s.size();
}

void add_scaled(std::vector<float>& acc, const std::vector<float>& v, float w) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
}

void unit(std::vector<float>& v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  for (float& x : v) x = static_cast<float>(x / n);
}

}  // namespace

std::vector<float> HashedEncoder::base(std::string_view word) const {
  Rng rng(mix_seed(seed, fnv1a(text::to_lower(word))));
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  unit(v);
  return v;
}

EncodedSentence HashedEncoder::encode(const std::string& sentence) const {
  const auto words = words_of(sentence);
  std::vector<std::vector<float>> bases;
  bases.reserve(words.size());
  for (const auto& w : words) bases.push_back(base(w.text));

  EncodedSentence out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    std::vector<std::pair<std::size_t, std::size_t>> pieces;  // code point ranges within the word
    if (w.cp_len >= 6) {
      pieces = {{0, w.cp_len / 2}, {w.cp_len / 2, w.cp_len}};
    } else {
      pieces = {{0, w.cp_len}};
    }
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const auto b0 = byte_of_cp(w.text, pieces[p].first);
      const auto b1 = byte_of_cp(w.text, pieces[p].second);
      TokenVector t;
      t.text = w.text.substr(b0, b1 - b0);
      t.start_char = w.cp_start + pieces[p].first;
      t.end_char = w.cp_start + pieces[p].second;
      t.vector = bases[i];
      if (i > 0) add_scaled(t.vector, bases[i - 1], context);
      if (i + 1 < words.size()) add_scaled(t.vector, bases[i + 1], context);
      add_scaled(t.vector, base(t.text + "#" + std::to_string(p)), piece);
      out.tokens.push_back(std::move(t));
    }
  }
  out.sentence_vector.assign(dim, 0.0f);
  for (const auto& b : bases) add_scaled(out.sentence_vector, b, 1.0f);
  if (bases.empty()) out.sentence_vector = base("");
  unit(out.sentence_vector);
  return out;
}

std::string precomputed_jsonl(const HashedEncoder& encoder, std::span<const LabeledSentence> sentences) {
  std::set<std::string> seen;
  std::string out;
  for (const auto& s : sentences) {
    const auto t = s.text();
    if (!seen.insert(t).second) continue;
    out += encoded_to_json(t, encoder.encode(t)).dump();
    out += '\n';
  }
  return out;
}

void write_precomputed(const fs::path& path, const HashedEncoder& encoder, std::span<const LabeledSentence> sentences) {
  io::write_file(path, precomputed_jsonl(encoder, sentences));
}

Embedder hashed_embedder(std::size_t dim, std::uint64_t seed) {
  EmbedderSpec spec;
  spec.dimension = dim;
  HashedEncoder enc;
  enc.dim = dim;
  enc.seed = seed;
  return Embedder(spec, std::make_shared<HashedProvider>(enc));
}

// ---- synthetic corpora ----

const std::vector<DomainShape>& crossner_shapes() {
  static const std::vector<DomainShape> shapes{
      {"politics", 200, 541, 651}, {"science", 200, 450, 543}, {"music", 100, 380, 456},
      {"literature", 100, 400, 416}, {"ai", 100, 350, 431}};
  return shapes;
}

EntitySchema shipped_schema(const std::string& name) {
  return load_schema_file((data_dir() / "schemas" / (name + ".json")).string());
}

namespace {

const std::vector<std::string> kSyllables{"ka", "lo", "mi", "ren", "tas", "vo", "dri", "sel", "an", "bur",
                                          "cor", "den", "fi", "gal", "hum", "ist", "jor", "kel", "mar", "nor",
                                          "pel", "qua", "ros", "sun", "tor", "ul", "ven", "wis", "zen", "ol"};

const std::vector<std::string> kFunctionWords{"the", "of", "and", "in", "to", "a", "was", "for", "on", "with",
                                              "by", "as", "at", "from", "his", "her", "their", "is", "were", "which"};

// Surfaces with characters that need quoting or are otherwise awkward.
const std::vector<std::vector<std::string>> kAwkward{
    {"O'Brien"},  {"\"Quoted\"", "Name"}, {"Re:Union"},    {"{Curly}"},       {"[Bracket]", "Hall"},
    {"AT&T"},     {"Smith,", "Jr."},      {"Back\\slash"}, {"None"},          {"null"},
    {"Zürich"},   {"Ærø", "Island"},      {"São", "Paulo"}, {"C++"},           {"n/a"},
    {"x:y,", "z"}, {"'single'"},          {"Müller-Lüdenscheidt"}};

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string make_word(Rng& rng, std::size_t min_syl, std::size_t max_syl) {
  const auto n = rng.uniform_int(min_syl, max_syl);
  std::string w;
  for (std::size_t i = 0; i < n; ++i) w += kSyllables[rng.uniform_int(0, kSyllables.size() - 1)];
  return w;
}

}  // namespace

std::vector<LabeledSentence> synth_sentences(const EntitySchema& schema, std::size_t n, std::uint64_t seed,
                                             SentenceId first_id) {
  Rng rng(mix_seed(seed, 0x5e17));
  std::vector<std::string> content;
  for (int i = 0; i < 150; ++i) content.push_back(make_word(rng, 1, 3));

  std::vector<std::vector<std::vector<std::string>>> lexicon(schema.size());
  for (auto& names : lexicon) {
    for (int i = 0; i < 30; ++i) {
      std::vector<std::string> name;
      const auto len = rng.uniform_int(1, 3);
      for (std::size_t t = 0; t < len; ++t) name.push_back(capitalize(make_word(rng, 1, 3)));
      names.push_back(std::move(name));
    }
    for (int i = 0; i < 3; ++i) names.push_back(kAwkward[rng.uniform_int(0, kAwkward.size() - 1)]);
  }

  std::vector<LabeledSentence> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    LabeledSentence sentence;
    sentence.id = first_id + static_cast<SentenceId>(s);
    const double u = rng.uniform01();
    const std::size_t entities = u < 0.12 ? 0 : u < 0.45 ? 1 : u < 0.75 ? 2 : u < 0.92 ? 3 : 4;
    const std::size_t fillers = rng.uniform_int(4, 14);
    // slot plan: true = entity
    std::vector<bool> plan(fillers, false);
    for (std::size_t e = 0; e < entities; ++e) {
      plan.insert(plan.begin() + static_cast<std::ptrdiff_t>(rng.uniform_int(0, plan.size())), true);
    }
    for (bool is_entity : plan) {
      if (is_entity) {
        const auto type = rng.uniform_int(0, schema.size() - 1);
        const auto& name = lexicon[type][rng.uniform_int(0, lexicon[type].size() - 1)];
        EntitySpan span;
        span.entity_type = schema[type].name;
        span.start = sentence.tokens.size();
        sentence.tokens.insert(sentence.tokens.end(), name.begin(), name.end());
        span.end = sentence.tokens.size();
        span.surface = text::join(name, " ");
        sentence.spans.push_back(std::move(span));
        // keep adjacent entities apart so BIO round trips stay unambiguous
        sentence.tokens.push_back(kFunctionWords[rng.uniform_int(0, kFunctionWords.size() - 1)]);
      } else if (rng.uniform01() < 0.45) {
        sentence.tokens.push_back(kFunctionWords[rng.uniform_int(0, kFunctionWords.size() - 1)]);
      } else {
        sentence.tokens.push_back(content[rng.uniform_int(0, content.size() - 1)]);
      }
    }
    sentence.tokens.push_back(".");
    out.push_back(std::move(sentence));
  }
  return out;
}

SynthDomain synth_domain(const DomainShape& shape, std::uint64_t seed) {
  SynthDomain d;
  d.schema = shipped_schema(shape.name);
  const auto s = mix_seed(seed, fnv1a(shape.name));
  d.train = synth_sentences(d.schema, shape.train, mix_seed(s, 1), 0);
  d.dev = synth_sentences(d.schema, shape.dev, mix_seed(s, 2), static_cast<SentenceId>(shape.train));
  d.test = synth_sentences(d.schema, shape.test, mix_seed(s, 3), static_cast<SentenceId>(shape.train + shape.dev));
  return d;
}

void write_bio_domain(const fs::path& dir, const SynthDomain& domain) {
  io::write_file(dir / "train.txt", to_bio(domain.train));
  io::write_file(dir / "dev.txt", to_bio(domain.dev));
  io::write_file(dir / "test.txt", to_bio(domain.test));
}

// ---- oracles ----

std::vector<OracleHit> brute_force_topk(const std::vector<std::vector<float>>& data, std::span<const float> query,
                                        std::size_t k) {
  double qn = 0.0;
  for (float x : query) qn += static_cast<double>(x) * x;
  qn = std::sqrt(qn);
  std::vector<OracleHit> all;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double dot = 0.0;
    double n = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d) {
      dot += static_cast<double>(data[i][d]) * query[d];
      n += static_cast<double>(data[i][d]) * data[i][d];
    }
    all.push_back({static_cast<std::uint32_t>(i), dot / (std::sqrt(n) * qn)});
  }
  std::stable_sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) { return a.score > b.score; });
  all.resize(std::min(k, all.size()));
  return all;
}

std::vector<OracleExample> pooling_oracle(const std::vector<std::vector<float>>& query_words,
                                          const std::vector<OracleWordRecord>& store, std::size_t k,
                                          std::size_t per_word_k, Aggregation aggregation,
                                          std::optional<SentenceId> exclude) {
  auto cosine = [](const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      dot += static_cast<double>(a[d]) * b[d];
      na += static_cast<double>(a[d]) * a[d];
      nb += static_cast<double>(b[d]) * b[d];
    }
    return dot / std::sqrt(na * nb);
  };
  // best[example][query word] = best similarity among that word's kept hits
  std::map<SentenceId, std::map<std::size_t, double>> best;
  for (std::size_t q = 0; q < query_words.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> sims;
    for (std::size_t r = 0; r < store.size(); ++r) {
      if (exclude && store[r].sentence_id == *exclude) continue;
      sims.emplace_back(cosine(query_words[q], store[r].vector), r);
    }
    std::stable_sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; j < std::min(per_word_k, sims.size()); ++j) {
      const auto sid = store[sims[j].second].sentence_id;
      auto [it, inserted] = best[sid].emplace(q, sims[j].first);
      if (!inserted) it->second = std::max(it->second, sims[j].first);
    }
  }
  std::vector<OracleExample> out;
  for (const auto& [sid, per_word] : best) {
    double score = aggregation == Aggregation::Max ? -2.0 : 0.0;
    for (const auto& [q, s] : per_word) score = aggregation == Aggregation::Max ? std::max(score, s) : score + s;
    out.push_back({sid, score});
  }
  std::stable_sort(out.begin(), out.end(), [](const OracleExample& a, const OracleExample& b) {
    return a.score > b.score;  // ties keep ascending id from the map
  });
  if (out.size() > k) out.resize(k);
  return out;
}

// ---- fixtures ----

namespace {

LabeledSentence make_sentence(SentenceId id, const std::string& text,
                              std::vector<std::tuple<std::string, std::size_t, std::size_t>> spans) {
  auto s = sentence_from_text(text, id);
  for (const auto& [type, start, end] : spans) {
    std::vector<std::string> covered(s.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                     s.tokens.begin() + static_cast<std::ptrdiff_t>(end));
    s.spans.push_back({type, start, end, text::join(covered, " ")});
  }
  return s;
}

std::vector<float> axis(std::initializer_list<std::pair<std::size_t, float>> parts) {
  std::vector<float> v(8, 0.0f);
  for (const auto& [i, x] : parts) v[i] = x;
  unit(v);
  return v;
}

}  // namespace

MacbookFixture macbook_fixture() {
  MacbookFixture f;
  f.schema = EntitySchema({{"product", "Names of products."}, {"time", "Dates and times."}});
  f.query = make_sentence(100, "I want to buy a 13-inch macbook from store", {{"product", 5, 7}});
  f.store = {make_sentence(1, "I want to buy a table from store", {{"product", 5, 6}}),
             make_sentence(2, "Show me a 15-inch macbook", {{"product", 3, 5}})};

  // one direction per content word; function words share a direction
  const std::map<std::string, std::vector<float>> word{
      {"macbook", axis({{0, 1.0f}})},
      {"table", axis({{0, 0.2f}, {1, 1.0f}})},
      {"13-inch", axis({{2, 1.0f}})},
      {"15-inch", axis({{2, 0.8f}, {3, 0.6f}})},
      {"want", axis({{4, 1.0f}})},
      {"buy", axis({{5, 1.0f}})},
      {"store", axis({{6, 1.0f}})},
      {"show", axis({{7, 1.0f}, {4, 0.3f}})},
  };
  const auto function_word = axis({{7, 1.0f}});
  const std::map<std::string, std::vector<float>> sentence{
      {f.query.text(), axis({{0, 1.0f}, {1, 0.2f}})},
      {f.store[0].text(), axis({{0, 0.95f}, {1, 0.1f}, {2, 0.3f}})},
      {f.store[1].text(), axis({{0, 0.3f}, {1, 0.9f}, {2, 0.3f}})},
  };
  for (const auto* s : {&f.query, &f.store[0], &f.store[1]}) {
    EncodedSentence enc;
    std::size_t pos = 0;
    for (const auto& tok : s->tokens) {
      const auto lower = text::to_lower(tok);
      const auto it = word.find(lower);
      enc.tokens.push_back({tok, pos, pos + text::utf8_length(tok), it == word.end() ? function_word : it->second});
      pos += text::utf8_length(tok) + 1;
    }
    enc.sentence_vector = sentence.at(s->text());
    f.embeddings_jsonl += encoded_to_json(s->text(), enc).dump() + "\n";
  }
  return f;
}

ShopFixture shop_fixture() {
  ShopFixture f;
  f.schema = EntitySchema({{"product", "Names of products."}, {"store", "Names of shops."}});
  const std::vector<std::string> products{"macbook", "kindle", "thinkpad", "walkman", "gameboy", "chromecast",
                                          "roomba",  "fitbit", "ipod",     "polaroid"};
  const std::vector<std::string> decoys{"toaster", "blender", "kettle", "stapler", "hairdryer",
                                        "lawnmower", "heater",  "printer", "scanner", "projector"};
  SentenceId id = 0;
  // short sentences carry the test products; long ones share most words with
  // the test queries but name other products
  for (const auto& p : products) f.train.push_back(make_sentence(id++, "show me a " + p, {{"product", 3, 4}}));
  for (const auto& d : decoys) {
    f.train.push_back(make_sentence(id++, "i want to buy a " + d + " from the store today", {{"product", 5, 6}}));
  }
  for (std::size_t i = 0; i < products.size(); ++i) {
    f.test.push_back(make_sentence(id++, "i want to buy a " + products[i] + " from the store tomorrow",
                                   {{"product", 5, 6}}));
  }
  return f;
}

// ---- HTTP stub ----

struct StubServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<std::size_t> requests{0};
};

StubServer::StubServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  auto* impl = impl_.get();
  impl->server.Post(R"(/.*)", [impl, handler](const httplib::Request& req, httplib::Response& res) {
    ++impl->requests;
    auto [status, body] = handler(req.body);
    res.status = status;
    res.set_content(body, "application/json");
  });
  impl->port = impl->server.bind_to_any_port("127.0.0.1");
  impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
  impl->server.wait_until_ready();
}

StubServer::~StubServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + path;
}

std::size_t StubServer::requests() const { return impl_->requests.load(); }

}  // namespace ragner::testkit
