#include "ragner/config.hpp"

#include <cstdlib>

#include "ragner/error.hpp"
#include "ragner/hashing.hpp"
#include "ragner/io.hpp"

namespace ragner {

using nlohmann::json;

json default_config_json() {
  return {
      {"seed", 13},
      {"domain", ""},
      {"paths",
       {{"train", ""}, {"dev", ""}, {"test", ""}, {"schema", ""}, {"output_dir", "run"}, {"store_dir", ""},
        {"template", ""}}},
      {"store", {{"mode", "splits"}, {"splits", {"train", "dev"}}, {"store_size", 500}}},
      {"embedder",
       {{"provider", "precomputed"},
        {"path", ""},
        {"model_name", "bge-base-en"},
        {"dimension", 768},
        {"stopwords_file", ""},
        {"store_words", "entity-only"},
        {"endpoint", ""},
        {"timeout_ms", 10000},
        {"retries", 2},
        {"max_in_flight", 4}}},
      {"index", {{"type", "ivf"}, {"nlist", 0}, {"kmeans_iters", 20}, {"train_per_list", 64}}},
      {"retriever",
       {{"mode", "word"}, {"k", 5}, {"per_word_k", 0}, {"aggregation", "max"}, {"nprobe", 0}, {"exclude_self", true}}},
      {"prompt", {{"most_similar_last", true}}},
      {"generator",
       {{"backend", "mock-gold"},
        {"endpoint", ""},
        {"wire", "completion"},
        {"model", ""},
        {"max_tokens", 256},
        {"temperature", 0.0},
        {"timeout_ms", 30000},
        {"retries", 2},
        {"parallelism", 4}}},
      {"augment",
       {{"dropout_fraction", 0.3},
        {"min_removed", 1},
        {"max_removed", 0},
        {"shuffle_fraction", 0.5},
        {"compose", false}}},
      {"eval", {{"grounding", "off"}, {"dedupe", false}, {"positional", false}}},
      {"parallelism", 1},
  };
}

namespace {

std::string qualified(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

void merge_into(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw Error(ErrorCode::ConfigError, "config section '" + where + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + path + "'");
    auto& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
    } else {
      slot = value;
    }
  }
}

template <class T>
T get(const json& section, const char* key, const std::string& where) {
  try {
    return section.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, "config key '" + qualified(where, key) + "' has the wrong type");
  }
}

std::size_t get_count(const json& section, const char* key, const std::string& where) {
  const auto& v = section.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::ConfigError, "config key '" + qualified(where, key) + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

template <class E>
E pick(const std::string& value, std::initializer_list<std::pair<const char*, E>> options, const std::string& key) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string("|") + name;
  }
  throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be one of " + allowed + ", got '" + value + "'");
}

template <class E>
std::string name_of(E e, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, v] : options) {
    if (v == e) return name;
  }
  return "?";
}

const std::initializer_list<std::pair<const char*, StoreMode>> kStoreModes{{"splits", StoreMode::Splits},
                                                                           {"sample", StoreMode::Sample}};
const std::initializer_list<std::pair<const char*, ProviderKind>> kProviders{
    {"precomputed", ProviderKind::PrecomputedFile}, {"remote", ProviderKind::RemoteService}};
const std::initializer_list<std::pair<const char*, WordSelection>> kWordSelections{
    {"entity-only", WordSelection::EntityOnly}, {"all", WordSelection::All}};
const std::initializer_list<std::pair<const char*, IndexKind>> kIndexKinds{{"flat", IndexKind::Flat},
                                                                          {"ivf", IndexKind::Ivf}};
const std::initializer_list<std::pair<const char*, RetrievalMode>> kModes{{"word", RetrievalMode::WordLevel},
                                                                         {"sentence", RetrievalMode::SentenceLevel}};
const std::initializer_list<std::pair<const char*, Aggregation>> kAggregations{{"max", Aggregation::Max},
                                                                              {"sum", Aggregation::SumOfBest}};
const std::initializer_list<std::pair<const char*, BackendKind>> kBackends{
    {"mock-gold", BackendKind::MockGold},
    {"mock-echo-nearest", BackendKind::MockEchoNearest},
    {"remote", BackendKind::RemoteCompletion}};
const std::initializer_list<std::pair<const char*, WireFormat>> kWires{{"completion", WireFormat::Completion},
                                                                      {"chat", WireFormat::Chat}};
const std::initializer_list<std::pair<const char*, Grounding>> kGroundings{{"off", Grounding::Off},
                                                                          {"strict", Grounding::Strict}};

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::string env_or(const char* name, std::string fallback) {
  if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  return fallback;
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::size_t begin = 0;
  for (;;) {
    const auto dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (!node->is_object() || !node->contains(part)) {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  *node = std::move(value);
}

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  json m = default_config_json();
  merge_into(m, doc, "");

  RunConfig c;
  c.seed = get_count(m, "seed", "");
  c.domain = get<std::string>(m, "domain", "");
  c.parallelism = get_count(m, "parallelism", "");
  if (c.parallelism == 0) throw Error(ErrorCode::ConfigError, "parallelism must be >= 1");

  const auto& p = m["paths"];
  c.paths.train = resolve(get<std::string>(p, "train", "paths"), base_dir);
  c.paths.dev = resolve(get<std::string>(p, "dev", "paths"), base_dir);
  c.paths.test = resolve(get<std::string>(p, "test", "paths"), base_dir);
  c.paths.schema = resolve(get<std::string>(p, "schema", "paths"), base_dir);
  c.paths.output_dir = resolve(get<std::string>(p, "output_dir", "paths"), base_dir);
  c.paths.store_dir = resolve(get<std::string>(p, "store_dir", "paths"), base_dir);
  c.paths.template_file = resolve(get<std::string>(p, "template", "paths"), base_dir);
  if (c.paths.output_dir.empty()) throw Error(ErrorCode::ConfigError, "paths.output_dir must not be empty");

  const auto& s = m["store"];
  c.store.mode = pick(get<std::string>(s, "mode", "store"), kStoreModes, "store.mode");
  c.store.splits = get<std::vector<std::string>>(s, "splits", "store");
  for (const auto& split : c.store.splits) {
    if (split != "train" && split != "dev" && split != "test") {
      throw Error(ErrorCode::ConfigError, "store.splits entries must be train, dev or test");
    }
  }
  c.store.store_size = get_count(s, "store_size", "store");

  const auto& e = m["embedder"];
  c.embedder.provider = pick(get<std::string>(e, "provider", "embedder"), kProviders, "embedder.provider");
  c.embedder.path = resolve(get<std::string>(e, "path", "embedder"), base_dir);
  c.embedder.model_name = get<std::string>(e, "model_name", "embedder");
  c.embedder.dimension = get_count(e, "dimension", "embedder");
  c.embedder.stopwords_file = resolve(get<std::string>(e, "stopwords_file", "embedder"), base_dir);
  c.embedder.store_words = pick(get<std::string>(e, "store_words", "embedder"), kWordSelections, "embedder.store_words");
  c.embedder.remote.endpoint = env_or("RAGNER_EMBEDDER_ENDPOINT", get<std::string>(e, "endpoint", "embedder"));
  c.embedder.remote.model_name = c.embedder.model_name;
  c.embedder.remote.timeout = std::chrono::milliseconds(get_count(e, "timeout_ms", "embedder"));
  c.embedder.remote.max_retries = get_count(e, "retries", "embedder");
  c.embedder.remote.max_in_flight = get_count(e, "max_in_flight", "embedder");
  c.embedder.remote.api_key = env_or("RAGNER_API_KEY", "");

  const auto& ix = m["index"];
  c.index.kind = pick(get<std::string>(ix, "type", "index"), kIndexKinds, "index.type");
  c.index.ivf.nlist = get_count(ix, "nlist", "index");
  c.index.ivf.kmeans_iters = get_count(ix, "kmeans_iters", "index");
  c.index.ivf.train_per_list = get_count(ix, "train_per_list", "index");
  c.index.ivf.seed = c.seed;

  const auto& r = m["retriever"];
  c.retriever.mode = pick(get<std::string>(r, "mode", "retriever"), kModes, "retriever.mode");
  c.retriever.k = get_count(r, "k", "retriever");
  c.retriever.per_word_k = get_count(r, "per_word_k", "retriever");
  c.retriever.aggregation = pick(get<std::string>(r, "aggregation", "retriever"), kAggregations, "retriever.aggregation");
  c.retriever.nprobe = get_count(r, "nprobe", "retriever");
  c.retriever.exclude_self = get<bool>(r, "exclude_self", "retriever");

  c.prompt.most_similar_last = get<bool>(m["prompt"], "most_similar_last", "prompt");

  const auto& g = m["generator"];
  c.generator.backend = pick(get<std::string>(g, "backend", "generator"), kBackends, "generator.backend");
  c.generator.endpoint = env_or("RAGNER_GENERATOR_ENDPOINT", get<std::string>(g, "endpoint", "generator"));
  c.generator.wire = pick(get<std::string>(g, "wire", "generator"), kWires, "generator.wire");
  c.generator.model = get<std::string>(g, "model", "generator");
  c.generator.api_key = env_or("RAGNER_API_KEY", "");
  c.generator.max_tokens = get_count(g, "max_tokens", "generator");
  c.generator.temperature = get<double>(g, "temperature", "generator");
  c.generator.timeout = std::chrono::milliseconds(get_count(g, "timeout_ms", "generator"));
  c.generator.max_retries = get_count(g, "retries", "generator");
  c.generator.parallelism = get_count(g, "parallelism", "generator");

  const auto& a = m["augment"];
  c.augment.dropout_fraction = get<double>(a, "dropout_fraction", "augment");
  c.augment.min_removed = get_count(a, "min_removed", "augment");
  c.augment.max_removed = get_count(a, "max_removed", "augment");
  c.augment.shuffle_fraction = get<double>(a, "shuffle_fraction", "augment");
  c.augment.compose = get<bool>(a, "compose", "augment");
  c.augment.seed = c.seed;

  const auto& ev = m["eval"];
  c.eval.grounding = pick(get<std::string>(ev, "grounding", "eval"), kGroundings, "eval.grounding");
  c.eval.dedupe = get<bool>(ev, "dedupe", "eval");
  c.eval.positional = get<bool>(ev, "positional", "eval");

  try {
    c.retriever.validate();
    c.generator.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::ConfigError, err.what());
  }
  if (c.embedder.dimension == 0) throw Error(ErrorCode::ConfigError, "embedder.dimension must be positive");
  return c;
}

json config_to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"domain", c.domain},
      {"paths",
       {{"train", c.paths.train.string()},
        {"dev", c.paths.dev.string()},
        {"test", c.paths.test.string()},
        {"schema", c.paths.schema.string()},
        {"output_dir", c.paths.output_dir.string()},
        {"store_dir", c.paths.store_dir.string()},
        {"template", c.paths.template_file.string()}}},
      {"store",
       {{"mode", name_of(c.store.mode, kStoreModes)}, {"splits", c.store.splits}, {"store_size", c.store.store_size}}},
      {"embedder",
       {{"provider", name_of(c.embedder.provider, kProviders)},
        {"path", c.embedder.path.string()},
        {"model_name", c.embedder.model_name},
        {"dimension", c.embedder.dimension},
        {"stopwords_file", c.embedder.stopwords_file.string()},
        {"store_words", name_of(c.embedder.store_words, kWordSelections)},
        {"endpoint", c.embedder.remote.endpoint},
        {"timeout_ms", c.embedder.remote.timeout.count()},
        {"retries", c.embedder.remote.max_retries},
        {"max_in_flight", c.embedder.remote.max_in_flight}}},
      {"index",
       {{"type", name_of(c.index.kind, kIndexKinds)},
        {"nlist", c.index.ivf.nlist},
        {"kmeans_iters", c.index.ivf.kmeans_iters},
        {"train_per_list", c.index.ivf.train_per_list}}},
      {"retriever",
       {{"mode", name_of(c.retriever.mode, kModes)},
        {"k", c.retriever.k},
        {"per_word_k", c.retriever.per_word_k},
        {"aggregation", name_of(c.retriever.aggregation, kAggregations)},
        {"nprobe", c.retriever.nprobe},
        {"exclude_self", c.retriever.exclude_self}}},
      {"prompt", {{"most_similar_last", c.prompt.most_similar_last}}},
      {"generator",
       {{"backend", name_of(c.generator.backend, kBackends)},
        {"endpoint", c.generator.endpoint},
        {"wire", name_of(c.generator.wire, kWires)},
        {"model", c.generator.model},
        {"max_tokens", c.generator.max_tokens},
        {"temperature", c.generator.temperature},
        {"timeout_ms", c.generator.timeout.count()},
        {"retries", c.generator.max_retries},
        {"parallelism", c.generator.parallelism}}},
      {"augment",
       {{"dropout_fraction", c.augment.dropout_fraction},
        {"min_removed", c.augment.min_removed},
        {"max_removed", c.augment.max_removed},
        {"shuffle_fraction", c.augment.shuffle_fraction},
        {"compose", c.augment.compose}}},
      {"eval",
       {{"grounding", name_of(c.eval.grounding, kGroundings)},
        {"dedupe", c.eval.dedupe},
        {"positional", c.eval.positional}}},
      {"parallelism", c.parallelism},
  };
}

std::string config_hash(const RunConfig& config) { return sha256_hex(config_to_json(config).dump()); }

LoadedConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  std::filesystem::path base = std::filesystem::current_path();
  if (!path.empty()) {
    doc = json::parse(io::read_file(path), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::ConfigError, "config file " + path.string() + " is not valid JSON");
    base = std::filesystem::absolute(path).parent_path();
  }
  json merged = default_config_json();
  merge_into(merged, doc, "");
  for (const auto& o : overrides) apply_override(merged, o);
  // override paths resolve against the config file directory too
  return {config_from_json(merged, base), merged, base};
}

}  // namespace ragner
