#include "ragner/app.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <optional>

#include "ragner/augment.hpp"
#include "ragner/error.hpp"
#include "ragner/hashing.hpp"
#include "ragner/io.hpp"
#include "ragner/parallel.hpp"
#include "ragner/text.hpp"

namespace ragner::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSplits{"train", "dev", "test"};

fs::path split_path(const RunConfig& c, const std::string& split) {
  if (split == "train") return c.paths.train;
  if (split == "dev") return c.paths.dev;
  return c.paths.test;
}

fs::path store_dir(const RunConfig& c) { return c.paths.artifacts() / "store"; }
fs::path schema_file(const RunConfig& c) { return c.paths.artifacts() / "corpus" / "schema.json"; }
fs::path examples_file(const RunConfig& c) { return store_dir(c) / "examples.jsonl"; }
fs::path finetune_source_file(const RunConfig& c) { return store_dir(c) / "finetune.jsonl"; }
fs::path word_index_file(const RunConfig& c) { return store_dir(c) / "word.idx"; }
fs::path sentence_index_file(const RunConfig& c) { return store_dir(c) / "sentence.idx"; }

std::string relative_key(const fs::path& root, const fs::path& file) {
  return file.lexically_relative(root).generic_string();
}

/// Collects hashes of what a command read and wrote.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config, fs::path root)
      : command_(std::move(command)), config_(config), root_(std::move(root)) {}

  void input(const fs::path& file) { inputs_[file.string()] = sha256_file(file); }
  void output(const fs::path& file) { outputs_[relative_key(root_, file)] = sha256_file(file); }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write() const {
    json j{{"command", command_},
           {"config_hash", config_hash(config_)},
           {"seed", config_.seed},
           {"domain", config_.domain},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"config", config_to_json(config_)}};
    if (!extra_.empty()) j["summary"] = extra_;
    io::write_file(manifest_file(root_, command_), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& config_;
  fs::path root_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  json extra_ = json::object();
};

/// Checks `file` against the outputs recorded by the upstream command.
void verify_upstream(const fs::path& root, const std::string& command, const fs::path& file) {
  const auto manifest_path = manifest_file(root, command);
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::MissingArtifact, "no " + command + " manifest at " + manifest_path.string() +
                                                "; run `ragner " + command + "` first");
  }
  if (!fs::exists(file)) {
    throw Error(ErrorCode::MissingArtifact, file.string() + " is missing; run `ragner " + command + "` first");
  }
  const auto manifest = json::parse(io::read_file(manifest_path), nullptr, false);
  const auto key = relative_key(root, file);
  if (manifest.is_discarded() || !manifest.contains("outputs") || !manifest["outputs"].contains(key)) {
    throw Error(ErrorCode::StaleArtifact, file.string() + " is not listed in " + manifest_path.string());
  }
  if (manifest["outputs"][key].get<std::string>() != sha256_file(file)) {
    throw Error(ErrorCode::StaleArtifact, file.string() + " changed since `ragner " + command + "` wrote it");
  }
}

std::vector<LabeledSentence> read_corpus_any(const fs::path& path, SentenceId first_id, std::size_t* dangling) {
  const auto doc = io::read_file(path);
  std::vector<LabeledSentence> sentences;
  if (path.extension() == ".jsonl") {
    sentences = sentences_from_jsonl(doc);
  } else {
    auto parsed = parse_bio(doc, first_id);
    if (dangling) *dangling += parsed.dangling_inside_tags;
    sentences = std::move(parsed.sentences);
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) sentences[i].id = first_id + static_cast<SentenceId>(i);
  return sentences;
}

std::vector<LabeledSentence> read_split(const RunConfig& c, const std::string& split) {
  const auto path = corpus_file(c, split);
  verify_upstream(c.paths.artifacts(), "ingest", path);
  return sentences_from_jsonl(io::read_file(path));
}

EntitySchema read_schema(const RunConfig& c) {
  verify_upstream(c.paths.artifacts(), "ingest", schema_file(c));
  return load_schema(io::read_file(schema_file(c)));
}

std::shared_ptr<const EmbeddingProvider> provider_for(const EmbedderConfig& e) {
  if (e.provider == ProviderKind::RemoteService) {
    if (e.remote.endpoint.empty()) throw Error(ErrorCode::ConfigError, "embedder.endpoint is required for remote");
    return make_remote_provider(e.remote);
  }
  if (e.path.empty()) throw Error(ErrorCode::ConfigError, "embedder.path is required for the precomputed provider");
  // ablation grids reuse the same embedding file across many cells
  static std::mutex mutex;
  static std::map<std::string, std::pair<std::string, std::shared_ptr<const EmbeddingProvider>>> cache;
  const auto key = fs::absolute(e.path).string();
  const auto stamp = std::to_string(fs::file_size(e.path)) + ":" +
                     std::to_string(fs::last_write_time(e.path).time_since_epoch().count());
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (slot.first != stamp || !slot.second) slot = {stamp, load_precomputed(e.path)};
  return slot.second;
}

Embedder make_embedder(const RunConfig& c) {
  EmbedderSpec spec;
  spec.provider = c.embedder.provider;
  spec.model_name = c.embedder.model_name;
  spec.dimension = c.embedder.dimension;
  if (!c.embedder.stopwords_file.empty()) spec.stopwords = load_stopwords(c.embedder.stopwords_file);
  return Embedder(std::move(spec), provider_for(c.embedder));
}

ExampleStore read_store(const RunConfig& c) {
  const auto root = c.paths.artifacts();
  verify_upstream(root, "index", examples_file(c));
  verify_upstream(root, "index", sentence_index_file(c));
  std::optional<VectorIndex> word_index;
  if (fs::exists(word_index_file(c))) {
    verify_upstream(root, "index", word_index_file(c));
    word_index.emplace(load_index(word_index_file(c)));
  }
  auto sentence_index = load_index(sentence_index_file(c));
  if (sentence_index.records().dim() != c.embedder.dimension) {
    throw Error(ErrorCode::StaleArtifact, "store was indexed with dimension " +
                                              std::to_string(sentence_index.records().dim()) + ", config says " +
                                              std::to_string(c.embedder.dimension));
  }
  return ExampleStore(sentences_from_jsonl(io::read_file(examples_file(c))), std::move(word_index),
                      std::move(sentence_index));
}

PromptTemplate read_template(const RunConfig& c) {
  return c.paths.template_file.empty() ? PromptTemplate::default_template()
                                       : PromptTemplate::load(c.paths.template_file);
}

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::pair<LabeledSentence, NerOutput>> example_pairs(const ExampleStore& store,
                                                                 std::span<const RetrievedExample> retrieved,
                                                                 const EntitySchema& schema) {
  std::vector<std::pair<LabeledSentence, NerOutput>> out;
  out.reserve(retrieved.size());
  for (const auto& r : retrieved) {
    const auto& ex = store.at(r.sentence_id);
    out.emplace_back(ex, gold_output(ex, schema));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

fs::path corpus_file(const RunConfig& config, const std::string& split) {
  return config.paths.artifacts() / "corpus" / (split + ".jsonl");
}

fs::path manifest_file(const fs::path& root, const std::string& command) {
  return root / "manifests" / (command + ".json");
}

IngestSummary cmd_ingest(const RunConfig& c) {
  if (c.paths.schema.empty()) throw Error(ErrorCode::ConfigError, "paths.schema is required");
  const auto root = c.paths.artifacts();
  Manifest manifest("ingest", c, root);
  const auto schema = load_schema_file(c.paths.schema.string());
  manifest.input(c.paths.schema);

  IngestSummary summary;
  SentenceId next_id = 0;
  bool any = false;
  for (const auto& split : kSplits) {
    const auto path = split_path(c, split);
    if (path.empty()) continue;
    any = true;
    auto sentences = read_corpus_any(path, next_id, &summary.dangling_inside_tags);
    conform_to_schema(sentences, schema);
    next_id += static_cast<SentenceId>(sentences.size());
    manifest.input(path);
    io::write_file(corpus_file(c, split), sentences_to_jsonl(sentences));
    manifest.output(corpus_file(c, split));
    summary.sentences[split] = sentences.size();
  }
  if (!any) throw Error(ErrorCode::ConfigError, "no corpus split configured (paths.train/dev/test)");
  io::write_file(schema_file(c), schema_to_json(schema).dump(2) + "\n");
  manifest.output(schema_file(c));
  manifest.note("sentences", summary.sentences);
  manifest.note("dangling_inside_tags", summary.dangling_inside_tags);
  manifest.write();
  return summary;
}

IndexSummary cmd_index(const RunConfig& c) {
  const auto root = c.paths.artifacts();
  Manifest manifest("index", c, root);
  std::vector<LabeledSentence> store_examples;
  std::vector<LabeledSentence> finetune;
  if (c.store.mode == StoreMode::Sample) {
    const auto train = read_split(c, "train");
    manifest.input(corpus_file(c, "train"));
    auto split = split_store_finetune(train, c.store.store_size, c.seed);
    store_examples = std::move(split.store);
    finetune = std::move(split.finetune);
  } else {
    for (const auto& s : c.store.splits) {
      auto sentences = read_split(c, s);
      manifest.input(corpus_file(c, s));
      store_examples.insert(store_examples.end(), std::make_move_iterator(sentences.begin()),
                            std::make_move_iterator(sentences.end()));
    }
  }
  if (store_examples.empty()) throw Error(ErrorCode::EmptyStore, "the configured store splits are empty");

  const auto embedder = make_embedder(c);
  const auto start = std::chrono::steady_clock::now();
  const auto store =
      ExampleStore::build(store_examples, embedder, c.index, c.embedder.store_words, c.parallelism);
  IndexSummary summary;
  summary.build_seconds = seconds_since(start);
  summary.store_sentences = store.examples().size();
  summary.finetune_sentences = finetune.size();
  summary.sentence_records = store.sentence_index().size();
  summary.word_records = store.word_index() ? store.word_index()->size() : 0;

  const json meta{{"model_name", c.embedder.model_name},
                  {"dimension", c.embedder.dimension},
                  {"store_words", c.embedder.store_words == WordSelection::All ? "all" : "entity-only"}};
  io::write_file(examples_file(c), sentences_to_jsonl(store.examples()));
  io::write_file(finetune_source_file(c), sentences_to_jsonl(finetune));
  save_index(store.sentence_index(), sentence_index_file(c), meta.dump());
  std::error_code ignored;
  fs::remove(word_index_file(c), ignored);
  if (store.word_index()) {
    save_index(*store.word_index(), word_index_file(c), meta.dump());
    manifest.output(word_index_file(c));
  }
  manifest.output(examples_file(c));
  manifest.output(finetune_source_file(c));
  manifest.output(sentence_index_file(c));
  manifest.note("store_sentences", summary.store_sentences);
  manifest.note("finetune_sentences", summary.finetune_sentences);
  manifest.note("word_records", summary.word_records);
  manifest.write();
  return summary;
}

std::size_t cmd_retrieve(const RunConfig& c, const std::vector<std::string>& queries, const fs::path& input) {
  std::vector<LabeledSentence> sentences;
  Manifest manifest("retrieve", c, c.paths.output_dir);
  if (!input.empty()) {
    sentences = read_corpus_any(input, kExternalIdBase, nullptr);
    manifest.input(input);
  }
  for (std::size_t i = 0; i < queries.size(); ++i) sentences.push_back(sentence_from_text(queries[i]));
  if (sentences.empty()) throw Error(ErrorCode::EmptyInput, "no queries given");

  const auto store = read_store(c);
  const auto embedder = make_embedder(c);
  const Retriever retriever(store, embedder, c.retriever);
  std::vector<json> lines(sentences.size());
  parallel_for(sentences.size(), c.parallelism, [&](std::size_t i) {
    const auto text = sentences[i].text();
    try {
      const auto hits = retriever.retrieve(sentences[i]);
      lines[i] = retrieval_to_json(text, hits);
    } catch (const Error& e) {
      lines[i] = {{"query_text", text}, {"examples", json::array()}, {"error", to_string(e.code())}};
    }
  });
  const auto out = c.paths.output_dir / "retrieval.jsonl";
  io::write_file(out, jsonl(lines));
  manifest.input(examples_file(c));
  manifest.output(out);
  manifest.write();
  return lines.size();
}

AugmentSummary cmd_augment(const RunConfig& c) {
  Manifest manifest("augment", c, c.paths.output_dir);
  const auto schema = read_schema(c);
  const auto store = read_store(c);
  std::vector<LabeledSentence> finetune;
  if (c.store.mode == StoreMode::Sample) {
    verify_upstream(c.paths.artifacts(), "index", finetune_source_file(c));
    finetune = sentences_from_jsonl(io::read_file(finetune_source_file(c)));
  } else {
    // leave-one-out over the store; exclude_self keeps each record's own gold out of its prompt
    finetune = store.examples();
  }
  if (finetune.empty()) throw Error(ErrorCode::EmptyInput, "no finetune sentences");

  const auto embedder = make_embedder(c);
  auto retriever_cfg = c.retriever;
  retriever_cfg.exclude_self = true;
  const Retriever retriever(store, embedder, retriever_cfg);
  const auto tmpl = read_template(c);
  const auto dataset = build_finetune_dataset(finetune, schema, retriever, tmpl, c.prompt, c.augment, c.parallelism);

  const auto out = c.paths.output_dir / "finetune.jsonl";
  io::write_file(out, finetune_to_jsonl(dataset, tmpl.template_id, c.seed));
  json failures = json::array();
  for (const auto& f : dataset.failures) failures.push_back({{"sentence_id", f.sentence_id}, {"error", f.error}});
  const auto failures_file = c.paths.output_dir / "augment_failures.json";
  io::write_file(failures_file, failures.dump(2) + "\n");
  manifest.input(examples_file(c));
  manifest.output(out);
  manifest.output(failures_file);
  manifest.note("records", dataset.records.size());
  manifest.note("failures", dataset.failures.size());
  manifest.write();
  return {dataset.records.size(), dataset.failures.size()};
}

PredictSummary cmd_predict(const RunConfig& c, const fs::path& input) {
  Manifest manifest("predict", c, c.paths.output_dir);
  const auto schema = read_schema(c);
  std::vector<LabeledSentence> sentences;
  if (input.empty()) {
    sentences = read_split(c, "test");
    manifest.input(corpus_file(c, "test"));
  } else {
    sentences = read_corpus_any(input, kExternalIdBase, nullptr);
    conform_to_schema(sentences, schema);
    manifest.input(input);
  }
  const auto store = read_store(c);
  const auto embedder = make_embedder(c);
  const Retriever retriever(store, embedder, c.retriever);
  const auto tmpl = read_template(c);
  const std::size_t n = sentences.size();

  std::vector<Prompt> prompts(n);
  std::vector<NerOutput> golds(n);
  std::vector<std::vector<SentenceId>> example_ids(n);
  std::vector<std::string> retrieval_errors(n);
  std::vector<double> search_seconds(n, 0.0);
  parallel_for(n, c.parallelism, [&](std::size_t i) {
    const auto& s = sentences[i];
    golds[i] = gold_output(s, schema);
    std::vector<RetrievedExample> hits;
    const auto start = std::chrono::steady_clock::now();
    try {
      hits = retriever.retrieve(s);
    } catch (const Error& e) {
      // a query of stop words only gets a zero-shot prompt
      if (e.code() != ErrorCode::EmptyQueryAfterStopwords) retrieval_errors[i] = e.what();
    }
    search_seconds[i] = seconds_since(start);
    for (const auto& h : hits) example_ids[i].push_back(h.sentence_id);
    prompts[i] = build_prompt(schema, example_pairs(store, hits, schema), s.text(), tmpl, c.prompt);
  });

  const auto generator = make_generator(c.generator);
  std::vector<GenerationRequest> requests(n);
  for (std::size_t i = 0; i < n; ++i) requests[i] = {sentences[i].id, &prompts[i], &golds[i]};
  const auto results = generate_batch(*generator, requests, c.generator.parallelism);

  PredictSummary summary;
  summary.sentences = n;
  std::vector<json> predictions(n);
  std::vector<json> generations(n);
  for (std::size_t i = 0; i < n; ++i) {
    PredictionRecord record{sentences[i].id, golds[i], NerOutput::empty_for(schema), false};
    std::string error = retrieval_errors[i];
    std::size_t dropped = 0;
    if (!error.empty()) {
      record.parse_failed = true;
    } else if (!results[i].ok()) {
      record.parse_failed = true;
      error = results[i].error;
      ++summary.generation_failures;
    } else {
      auto parsed = parse_output(results[i].completion_text, schema, sentences[i].text(), c.eval.grounding);
      record.predicted = std::move(parsed.output);
      record.parse_failed = parsed.no_dictionary;
      dropped = parsed.dropped_ungrounded;
    }
    if (record.parse_failed) ++summary.parse_failures;
    auto line = prediction_to_json(record);
    line["text"] = sentences[i].text();
    line["completion"] = results[i].completion_text;
    line["example_ids"] = example_ids[i];
    line["dropped_ungrounded"] = dropped;
    if (!error.empty()) line["error"] = error;
    predictions[i] = std::move(line);
    generations[i] = {{"sentence_id", sentences[i].id},
                      {"backend", results[i].backend_tag},
                      {"attempts", results[i].attempt_count},
                      {"latency_s", results[i].latency_s},
                      {"search_latency_s", search_seconds[i]}};
  }
  summary.generation = summarize_latency(results);
  summary.search = summarize_latency(std::span<const double>(search_seconds));

  const auto out = c.paths.output_dir / "predictions.jsonl";
  io::write_file(out, jsonl(predictions));
  // timings vary run to run, so they stay out of the manifest
  io::write_file(c.paths.output_dir / "generations.jsonl", jsonl(generations));
  io::write_file(c.paths.output_dir / "latency.json",
                 json{{"generation", latency_to_json(summary.generation)}, {"search", latency_to_json(summary.search)}}
                         .dump(2) +
                     "\n");
  manifest.input(examples_file(c));
  manifest.output(out);
  manifest.note("sentences", n);
  manifest.note("generation_failures", summary.generation_failures);
  manifest.note("parse_failures", summary.parse_failures);
  manifest.write();
  return summary;
}

EvalReport cmd_evaluate(const RunConfig& c, const fs::path& predictions, std::string* text) {
  Manifest manifest("evaluate", c, c.paths.output_dir);
  fs::path path = predictions;
  if (path.empty()) {
    path = c.paths.output_dir / "predictions.jsonl";
    verify_upstream(c.paths.output_dir, "predict", path);
  }
  std::vector<PredictionRecord> records;
  const auto document = io::read_file(path);
  for (const auto& line : text::split_lines(document)) {
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::FormatError, "bad JSON line in " + path.string());
    records.push_back(prediction_from_json(j));
  }
  manifest.input(path);

  EvalReport report;
  if (c.eval.positional) {
    const auto schema = read_schema(c);
    report = score_positional(read_split(c, "test"), records, schema);
  } else {
    report = score(records, ScoreOptions{c.eval.dedupe});
  }

  const auto title = "micro F1 " + (c.domain.empty() ? std::string() : "(" + c.domain + ") ") + percent(report.f1());
  const auto table = format_report(report, title);
  auto j = report_to_json(report);
  j["config_fingerprint"] = config_hash(c);
  j["seeds"] = {{"run", c.seed}};
  j["template_id"] = read_template(c).template_id;
  j["model_name"] = c.generator.model.empty() ? make_generator(c.generator)->tag() : c.generator.model;
  j["embedder"] = c.embedder.model_name;
  j["domain"] = c.domain;
  j["matching"] = c.eval.positional ? "positional" : (c.eval.dedupe ? "multiset-dedupe" : "multiset");
  const auto json_out = c.paths.output_dir / "eval" / "report.json";
  const auto text_out = c.paths.output_dir / "eval" / "report.txt";
  io::write_file(json_out, j.dump(2) + "\n");
  io::write_file(text_out, table);
  manifest.output(json_out);
  manifest.output(text_out);
  manifest.write();
  if (text) *text = table;
  return report;
}

// ---- ablation ----

std::optional<double> AblationRow::average_f1() const {
  if (cells.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& cell : cells) {
    if (!cell.ok) return std::nullopt;
    total += cell.report.f1();
  }
  return total / static_cast<double>(cells.size());
}

namespace {

struct Choice {
  std::string label;
  std::vector<std::pair<std::string, json>> sets;  // dotted key -> value
};

bool is_path_key(const std::string& key) {
  return key.rfind("paths.", 0) == 0 || key == "embedder.path" || key == "embedder.stopwords_file";
}

std::vector<std::pair<std::string, json>> read_sets(const json& set, const fs::path& grid_dir) {
  if (!set.is_object()) throw Error(ErrorCode::ConfigError, "grid \"set\" must be an object");
  std::vector<std::pair<std::string, json>> out;
  for (const auto& [key, value] : set.items()) {
    json v = value;
    if (is_path_key(key) && v.is_string() && !v.get<std::string>().empty() && fs::path(v.get<std::string>()).is_relative()) {
      v = (grid_dir / v.get<std::string>()).lexically_normal().string();
    }
    out.emplace_back(key, v);
  }
  return out;
}

std::string scalar_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::vector<Choice> read_choices(const json& spec, const std::string& key, const fs::path& grid_dir) {
  if (!spec.is_array() || spec.empty()) throw Error(ErrorCode::ConfigError, "grid value lists must be non-empty arrays");
  std::vector<Choice> out;
  for (const auto& v : spec) {
    if (v.is_object() && v.contains("set")) {
      out.push_back({v.value("name", std::string("?")), read_sets(v["set"], grid_dir)});
    } else {
      if (key.empty()) throw Error(ErrorCode::ConfigError, "scalar grid values need the axis \"key\"");
      out.push_back({scalar_label(v), {{key, v}}});
    }
  }
  return out;
}

void apply_sets(json& merged, const std::vector<std::pair<std::string, json>>& sets) {
  for (const auto& [key, value] : sets) apply_override(merged, key + "=" + value.dump());
}

/// Identifies everything the ingest + index stages depend on.
std::string store_key(const RunConfig& c) {
  const auto j = config_to_json(c);
  json part{{"seed", c.seed}, {"store", j["store"]}, {"embedder", j["embedder"]}, {"index", j["index"]}};
  for (const auto& split : kSplits) {
    const auto p = split_path(c, split);
    part["paths"][split] = p.empty() ? "" : p.string() + "@" + sha256_file(p);
  }
  part["paths"]["schema"] = c.paths.schema.string() + "@" + sha256_file(c.paths.schema);
  return sha256_hex(part.dump()).substr(0, 16);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    out += std::isalnum(u) != 0 ? static_cast<char>(std::tolower(u)) : '-';
  }
  return out;
}

}  // namespace

AblationResult cmd_ablate(const LoadedConfig& base, const json& grid, const fs::path& grid_dir, std::string* text) {
  if (!grid.is_object()) throw Error(ErrorCode::ConfigError, "grid document must be a JSON object");
  std::vector<Choice> domains;
  if (grid.contains("domains")) {
    domains = read_choices(grid["domains"], "", grid_dir);
  } else {
    domains.push_back({base.config.domain.empty() ? "default" : base.config.domain, {}});
  }
  std::vector<std::vector<Choice>> axes;
  std::vector<std::string> axis_names;
  for (const auto& axis : grid.value("axes", json::array())) {
    axis_names.push_back(axis.value("name", axis.value("key", std::string("axis"))));
    axes.push_back(read_choices(axis.at("values"), axis.value("key", std::string()), grid_dir));
  }

  // cartesian product, first axis slowest
  std::vector<std::vector<std::size_t>> combos{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& combo : combos) {
      for (std::size_t i = 0; i < axis.size(); ++i) {
        auto c = combo;
        c.push_back(i);
        next.push_back(std::move(c));
      }
    }
    combos = std::move(next);
  }

  const fs::path root = base.config.paths.output_dir / "ablation";
  AblationResult result;
  for (const auto& d : domains) result.domains.push_back(d.label);

  for (std::size_t row_index = 0; row_index < combos.size(); ++row_index) {
    const auto& combo = combos[row_index];
    AblationRow row;
    for (std::size_t a = 0; a < combo.size(); ++a) {
      if (!row.label.empty()) row.label += ", ";
      row.label += axis_names[a] + "=" + axes[a][combo[a]].label;
    }
    if (row.label.empty()) row.label = "base";

    for (const auto& domain : domains) {
      AblationCell cell;
      cell.domain = domain.label;
      try {
        json merged = base.merged;
        apply_sets(merged, domain.sets);
        for (std::size_t a = 0; a < combo.size(); ++a) apply_sets(merged, axes[a][combo[a]].sets);
        auto config = config_from_json(merged, base.base_dir);
        config.domain = domain.label;
        config.paths.output_dir = root / "cells" / (std::to_string(row_index) + "-" + slug(row.label)) / slug(domain.label);
        config.paths.store_dir.clear();
        const auto key = store_key(config);
        config.paths.store_dir = root / "stores" / (slug(domain.label) + "-" + key);
        const auto marker = config.paths.store_dir / "store.key";
        if (!fs::exists(marker) || io::read_file(marker) != key) {
          cmd_ingest(config);
          cmd_index(config);
          io::write_file(marker, key);
        }
        const auto predicted = cmd_predict(config);
        cell.report = cmd_evaluate(config);
        cell.generation_median_s = predicted.generation.median;
        cell.search_median_s = predicted.search.median;
        cell.ok = true;
      } catch (const Error& e) {
        cell.error = e.what();
      }
      row.cells.push_back(std::move(cell));
    }
    result.rows.push_back(std::move(row));
  }

  const auto table = format_ablation(result);
  io::write_file(root / "table.txt", table);
  io::write_file(root / "table.json", ablation_to_json(result).dump(2) + "\n");
  if (text) *text = table;
  return result;
}

std::string format_ablation(const AblationResult& result) {
  std::size_t label_width = 7;
  for (const auto& r : result.rows) label_width = std::max(label_width, r.label.size());
  std::vector<std::size_t> widths;
  for (const auto& d : result.domains) widths.push_back(std::max<std::size_t>(d.size(), 7));

  auto pad = [](const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; };
  std::string out = std::string("setting") + std::string(label_width - 7, ' ');
  for (std::size_t i = 0; i < result.domains.size(); ++i) out += "  " + pad(result.domains[i], widths[i]);
  out += "  " + pad("Average", 7) + "  " + pad("gen p50 s", 10) + "  " + pad("search p50 ms", 13) + "\n";
  char buf[64];
  for (const auto& row : result.rows) {
    out += row.label + std::string(label_width - row.label.size(), ' ');
    std::vector<double> gen;
    std::vector<double> search;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      const auto& cell = row.cells[i];
      out += "  " + pad(cell.ok ? percent(cell.report.f1()) : "FAILED", widths[i]);
      if (cell.ok) {
        gen.push_back(cell.generation_median_s);
        search.push_back(cell.search_median_s);
      }
    }
    const auto avg = row.average_f1();
    out += "  " + pad(avg ? percent(*avg) : "-", 7);
    std::snprintf(buf, sizeof buf, "%.4f", summarize_latency(std::span<const double>(gen)).median);
    out += "  " + pad(gen.empty() ? "-" : buf, 10);
    std::snprintf(buf, sizeof buf, "%.3f", summarize_latency(std::span<const double>(search)).median * 1000.0);
    out += "  " + pad(search.empty() ? "-" : buf, 13) + "\n";
  }
  for (const auto& row : result.rows) {
    for (const auto& cell : row.cells) {
      if (!cell.ok) out += "failed: " + row.label + " / " + cell.domain + ": " + cell.error + "\n";
    }
  }
  return out;
}

json ablation_to_json(const AblationResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json cells = json::array();
    for (const auto& cell : row.cells) {
      json c{{"domain", cell.domain}, {"ok", cell.ok}};
      if (cell.ok) {
        c["f1"] = cell.report.f1();
        c["report"] = report_to_json(cell.report);
        c["generation_median_s"] = cell.generation_median_s;
        c["search_median_s"] = cell.search_median_s;
      } else {
        c["error"] = cell.error;
      }
      cells.push_back(std::move(c));
    }
    const auto avg = row.average_f1();
    rows.push_back({{"setting", row.label}, {"cells", cells}, {"average_f1", avg ? json(*avg) : json(nullptr)}});
  }
  return {{"domains", result.domains}, {"rows", rows}};
}

}  // namespace ragner::app
