#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragner/corpus.hpp"

namespace ragner {

/// Generation-task target: one list of entity strings per schema type, in
/// schema order. `unrecognized` holds keys a model emitted outside the schema.
struct NerOutput {
  using Entry = std::pair<std::string, std::vector<std::string>>;

  std::vector<Entry> entries;
  std::vector<Entry> unrecognized;

  static NerOutput empty_for(const EntitySchema& schema);

  std::vector<std::string> keys() const;
  const std::vector<std::string>* find(std::string_view key) const;
  std::vector<std::string>* find(std::string_view key);

  bool operator==(const NerOutput&) const = default;
};

/// Gold target for a sentence: every schema type once, values in span order.
/// Throws UnknownSpanType.
NerOutput gold_output(const LabeledSentence& sentence, const EntitySchema& schema);

/// Projects `output` onto `schema`: keys follow schema order, types missing
/// from `output` become empty lists, types absent from `schema` are dropped.
NerOutput rekey(const NerOutput& output, const EntitySchema& schema);

nlohmann::json ner_output_to_json(const NerOutput& output);
NerOutput ner_output_from_json(const nlohmann::json& j);

}  // namespace ragner
