#include "ragner/ner_output.hpp"

#include "ragner/error.hpp"

namespace ragner {

NerOutput NerOutput::empty_for(const EntitySchema& schema) {
  NerOutput out;
  out.entries.reserve(schema.size());
  for (const auto& t : schema.types()) out.entries.emplace_back(t.name, std::vector<std::string>{});
  return out;
}

std::vector<std::string> NerOutput::keys() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& [k, v] : entries) out.push_back(k);
  return out;
}

const std::vector<std::string>* NerOutput::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::vector<std::string>* NerOutput::find(std::string_view key) {
  for (auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

NerOutput gold_output(const LabeledSentence& sentence, const EntitySchema& schema) {
  NerOutput out = NerOutput::empty_for(schema);
  for (const auto& span : sentence.spans) {
    const auto idx = schema.find(span.entity_type);
    if (!idx) {
      throw Error(ErrorCode::UnknownSpanType, "sentence " + std::to_string(sentence.id) + ": type '" +
                                                  span.entity_type + "' not in schema");
    }
    out.entries[*idx].second.push_back(span.surface);
  }
  return out;
}

NerOutput rekey(const NerOutput& output, const EntitySchema& schema) {
  NerOutput out = NerOutput::empty_for(schema);
  for (const auto& [key, values] : output.entries) {
    const auto idx = schema.find(key);
    if (!idx) continue;
    auto& dst = out.entries[*idx].second;
    dst.insert(dst.end(), values.begin(), values.end());
  }
  return out;
}

nlohmann::json ner_output_to_json(const NerOutput& output) {
  // arrays of pairs keep key order, which a JSON object would not
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [k, v] : output.entries) entries.push_back({k, v});
  nlohmann::json j = {{"entries", entries}};
  if (!output.unrecognized.empty()) {
    nlohmann::json extra = nlohmann::json::array();
    for (const auto& [k, v] : output.unrecognized) extra.push_back({k, v});
    j["unrecognized"] = extra;
  }
  return j;
}

NerOutput ner_output_from_json(const nlohmann::json& j) {
  try {
    NerOutput out;
    for (const auto& e : j.at("entries")) {
      out.entries.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::vector<std::string>>());
    }
    if (j.contains("unrecognized")) {
      for (const auto& e : j.at("unrecognized")) {
        out.unrecognized.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::vector<std::string>>());
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad NerOutput JSON: ") + e.what());
  }
}

}  // namespace ragner
