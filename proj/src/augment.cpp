#include "ragner/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ragner/error.hpp"
#include "ragner/parallel.hpp"

namespace ragner {

namespace {
// stream tags for mix_seed; fixed so datasets stay reproducible across versions
constexpr std::uint64_t kDropSubsetStream = 0xd509;
constexpr std::uint64_t kShuffleSubsetStream = 0x5f1e;
}  // namespace

void AugmentConfig::validate(std::size_t schema_size) const {
  if (!(dropout_fraction >= 0.0 && dropout_fraction <= 1.0) || !(shuffle_fraction >= 0.0 && shuffle_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "augment fractions must lie in [0, 1]");
  }
  if (dropout_fraction > 0.0) {
    if (schema_size < 2) throw Error(ErrorCode::SchemaTooSmall, "type dropout needs at least 2 entity types");
    const auto hi = effective_max_removed(schema_size);
    if (min_removed < 1 || min_removed > hi || hi >= schema_size) {
      throw Error(ErrorCode::InvalidArgument, "need 1 <= min_removed <= max_removed < |schema|");
    }
  }
}

TypeDropout drop_entity_types(const NerOutput& gold, const EntitySchema& schema, Rng& rng, const AugmentConfig& cfg) {
  const std::size_t n = schema.size();
  if (n < 2) throw Error(ErrorCode::SchemaTooSmall, "type dropout needs at least 2 entity types");
  const std::size_t hi = cfg.effective_max_removed(n);
  if (cfg.min_removed < 1 || cfg.min_removed > hi || hi >= n) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= min_removed <= max_removed < |schema|");
  }
  const auto r = static_cast<std::size_t>(rng.uniform_int(cfg.min_removed, hi));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < r; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> removed(n, false);
  for (std::size_t i = 0; i < r; ++i) removed[order[i]] = true;

  TypeDropout out;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) {
      out.removed.push_back(schema[i].name);
    } else {
      kept.push_back(i);
    }
  }
  out.schema = schema.select(kept);
  out.gold = rekey(gold, out.schema);
  return out;
}

EntitySchema shuffle_entity_types(const EntitySchema& schema, Rng& rng, std::vector<std::size_t>* permutation) {
  std::vector<std::size_t> order(schema.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  if (permutation) *permutation = order;
  return schema.select(order);
}

namespace {

/// Exactly `count` members, chosen by ranking per-sentence hashes.
std::vector<bool> choose_subset(std::span<const LabeledSentence> sentences, std::size_t count, std::uint64_t seed,
                                std::uint64_t stream) {
  const std::uint64_t stream_seed = mix_seed(seed, stream);
  std::vector<std::pair<std::uint64_t, std::size_t>> keys(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) keys[i] = {mix_seed(stream_seed, sentences[i].id), i};
  std::sort(keys.begin(), keys.end());
  std::vector<bool> chosen(sentences.size(), false);
  for (std::size_t i = 0; i < count && i < keys.size(); ++i) chosen[keys[i].second] = true;
  return chosen;
}

std::size_t rounded(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

std::vector<std::size_t> positions_in(const EntitySchema& full, const EntitySchema& part) {
  std::vector<std::size_t> out;
  out.reserve(part.size());
  for (const auto& t : part.types()) out.push_back(*full.find(t.name));
  return out;
}

FinetuneRecord make_record(const LabeledSentence& sentence, const NerOutput& gold, const EntitySchema& full,
                           const EntitySchema& record_schema, const std::vector<std::pair<LabeledSentence, NerOutput>>& examples,
                           const PromptTemplate& tmpl, const PromptOptions& options) {
  std::vector<std::pair<LabeledSentence, NerOutput>> rekeyed;
  rekeyed.reserve(examples.size());
  for (const auto& [ex, out] : examples) rekeyed.emplace_back(ex, rekey(out, record_schema));
  const auto prompt = build_prompt(record_schema, rekeyed, sentence.text(), tmpl, options);
  FinetuneRecord rec;
  rec.prompt = prompt.rendered;
  rec.completion = render_output(rekey(gold, record_schema));
  rec.provenance.source = sentence.id;
  rec.provenance.permutation = positions_in(full, record_schema);
  return rec;
}

}  // namespace

FinetuneDataset build_finetune_dataset(std::span<const LabeledSentence> finetune, const EntitySchema& schema,
                                       const Retriever& retriever, const PromptTemplate& tmpl,
                                       const PromptOptions& prompt_options, const AugmentConfig& cfg,
                                       std::size_t parallelism) {
  cfg.validate(schema.size());
  const std::size_t n = finetune.size();
  const auto drop = choose_subset(finetune, rounded(cfg.dropout_fraction, n), cfg.seed, kDropSubsetStream);
  const auto shuffle = choose_subset(finetune, rounded(cfg.shuffle_fraction, n), cfg.seed, kShuffleSubsetStream);

  struct Slot {
    std::vector<FinetuneRecord> records;
    std::optional<AugmentFailure> failure;
  };
  std::vector<Slot> slots(n);

  parallel_for(n, parallelism, [&](std::size_t i) {
    const auto& sentence = finetune[i];
    try {
      const auto gold = gold_output(sentence, schema);
      std::vector<RetrievedExample> retrieved;
      try {
        retrieved = retriever.retrieve(sentence);
      } catch (const Error& e) {
        // sentences made only of stop words get a zero-shot prompt
        if (e.code() != ErrorCode::EmptyQueryAfterStopwords) throw;
      }
      std::vector<std::pair<LabeledSentence, NerOutput>> examples;
      std::vector<SentenceId> example_ids;
      for (const auto& r : retrieved) {
        const auto& ex = retriever.store().at(r.sentence_id);
        examples.emplace_back(ex, gold_output(ex, schema));
        example_ids.push_back(r.sentence_id);
      }

      Rng shuffle_rng(mix_seed(cfg.seed, std::uint64_t{sentence.id} * 4 + 1));
      Rng drop_rng(mix_seed(cfg.seed, std::uint64_t{sentence.id} * 4 + 2));

      EntitySchema plain_schema = schema;
      if (shuffle[i]) plain_schema = shuffle_entity_types(schema, shuffle_rng);
      auto plain = make_record(sentence, gold, schema, plain_schema, examples, tmpl, prompt_options);
      plain.provenance.shuffled = shuffle[i];
      plain.provenance.example_ids = example_ids;
      slots[i].records.push_back(std::move(plain));

      if (drop[i]) {
        auto dropped = drop_entity_types(gold, schema, drop_rng, cfg);
        bool shuffled = false;
        if (cfg.compose && drop_rng.uniform01() < cfg.shuffle_fraction) {
          dropped.schema = shuffle_entity_types(dropped.schema, drop_rng);
          shuffled = true;
        }
        auto dup = make_record(sentence, gold, schema, dropped.schema, examples, tmpl, prompt_options);
        dup.provenance.dropout = true;
        dup.provenance.shuffled = shuffled;
        dup.provenance.removed_types = std::move(dropped.removed);
        dup.provenance.example_ids = example_ids;
        slots[i].records.push_back(std::move(dup));
      }
    } catch (const Error& e) {
      slots[i].records.clear();
      slots[i].failure = AugmentFailure{sentence.id, e.what()};
    }
  });

  FinetuneDataset dataset;
  dataset.records.reserve(n + rounded(cfg.dropout_fraction, n));
  for (auto& slot : slots) {
    for (auto& r : slot.records) dataset.records.push_back(std::move(r));
    if (slot.failure) dataset.failures.push_back(std::move(*slot.failure));
  }
  return dataset;
}

nlohmann::json finetune_record_to_json(const FinetuneRecord& record, const std::string& template_id, std::uint64_t seed) {
  nlohmann::json transforms = nlohmann::json::array();
  if (record.provenance.dropout) transforms.push_back("type_dropout");
  if (record.provenance.shuffled) transforms.push_back("type_shuffle");
  return {{"prompt", record.prompt},
          {"completion", record.completion},
          {"provenance",
           {{"source_sentence_id", record.provenance.source},
            {"transforms", transforms},
            {"removed_types", record.provenance.removed_types},
            {"permutation", record.provenance.permutation},
            {"example_ids", record.provenance.example_ids},
            {"template_id", template_id},
            {"seed", seed}}}};
}

std::string finetune_to_jsonl(const FinetuneDataset& dataset, const std::string& template_id, std::uint64_t seed) {
  std::string out;
  for (const auto& r : dataset.records) {
    out += finetune_record_to_json(r, template_id, seed).dump();
    out += '\n';
  }
  return out;
}

}  // namespace ragner
