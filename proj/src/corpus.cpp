#include "ragner/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "ragner/error.hpp"
#include "ragner/io.hpp"
#include "ragner/rng.hpp"
#include "ragner/text.hpp"

namespace ragner {

std::string LabeledSentence::text() const { return text::join(tokens, " "); }

std::string fold_type_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (const char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

EntitySchema::EntitySchema(std::vector<EntityType> types) : types_(std::move(types)) {
  std::set<std::string> seen;
  for (auto& t : types_) {
    t.name = std::string(text::trim(t.name));
    const auto folded = fold_type_name(t.name);
    if (folded.empty()) throw Error(ErrorCode::InvalidArgument, "entity type with empty name");
    if (!seen.insert(folded).second) {
      throw Error(ErrorCode::DuplicateTypeName, "entity type '" + t.name + "' listed twice");
    }
    if (text::trim(t.definition).empty()) {
      throw Error(ErrorCode::EmptyDefinition, "entity type '" + t.name + "' has no definition");
    }
  }
}

std::vector<std::string> EntitySchema::names() const {
  std::vector<std::string> out;
  out.reserve(types_.size());
  for (const auto& t : types_) out.push_back(t.name);
  return out;
}

std::optional<std::size_t> EntitySchema::find(std::string_view name) const {
  const auto folded = fold_type_name(name);
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (fold_type_name(types_[i].name) == folded) return i;
  }
  return std::nullopt;
}

EntitySchema EntitySchema::select(std::span<const std::size_t> order) const {
  std::vector<EntityType> out;
  out.reserve(order.size());
  for (const auto i : order) out.push_back(types_.at(i));
  return EntitySchema(std::move(out));
}

// ---------------------------------------------------------------------------
// BIO

namespace {

struct OpenSpan {
  std::string type;
  std::size_t start = 0;
};

void close_span(LabeledSentence& s, std::optional<OpenSpan>& open, std::size_t end) {
  if (!open) return;
  std::vector<std::string> covered(s.tokens.begin() + static_cast<std::ptrdiff_t>(open->start),
                                   s.tokens.begin() + static_cast<std::ptrdiff_t>(end));
  s.spans.push_back({open->type, open->start, end, text::join(covered, " ")});
  open.reset();
}

}  // namespace

ParsedCorpus parse_bio(std::string_view document, SentenceId first_id) {
  ParsedCorpus out;
  LabeledSentence current;
  std::optional<OpenSpan> open;
  SentenceId next_id = first_id;

  auto flush = [&] {
    close_span(current, open, current.tokens.size());
    if (!current.tokens.empty()) {
      current.id = next_id++;
      out.sentences.push_back(std::move(current));
    }
    current = LabeledSentence{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    auto nl = document.find('\n', pos);
    if (nl == std::string_view::npos) nl = document.size();
    std::string_view line = document.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (text::trim(line).empty()) {
      flush();
      if (nl == document.size()) break;
      continue;
    }
    const auto fields = text::split_whitespace(line);
    if (fields.size() != 2) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": expected 2 fields, got " +
                                                std::to_string(fields.size()));
    }
    const std::string& token = fields[0];
    const std::string& tag = fields[1];
    if (token == "-DOCSTART-") {
      if (nl == document.size()) break;
      continue;
    }

    const std::size_t index = current.tokens.size();
    current.tokens.push_back(token);
    if (tag == "O") {
      close_span(current, open, index);
    } else if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
      const std::string type = tag.substr(2);
      if (tag[0] == 'B') {
        close_span(current, open, index);
        open = OpenSpan{type, index};
      } else if (!open || open->type != type) {
        ++out.dangling_inside_tags;
        close_span(current, open, index);
        open = OpenSpan{type, index};
      }
    } else {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": bad tag '" + tag + "'");
    }
    if (nl == document.size()) break;
  }
  flush();
  return out;
}

std::string to_bio(std::span<const LabeledSentence> sentences) {
  std::string out;
  for (std::size_t n = 0; n < sentences.size(); ++n) {
    const auto& s = sentences[n];
    std::vector<std::string> tags(s.tokens.size(), "O");
    for (const auto& span : s.spans) {
      // CrossNER spelling: "political party" -> "politicalparty"
      std::string type;
      for (const char c : span.entity_type) {
        if (!std::isspace(static_cast<unsigned char>(c))) type += c;
      }
      for (std::size_t i = span.start; i < span.end && i < tags.size(); ++i) {
        tags[i] = (i == span.start ? "B-" : "I-") + type;
      }
    }
    if (n) out += '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i];
      out += '\t';
      out += tags[i];
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// schema

EntitySchema load_schema(std::string_view document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("schema is not valid JSON: ") + e.what());
  }
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("types")) list = &j["types"];
  if (!list->is_array()) throw Error(ErrorCode::FormatError, "schema must be an array of {name, definition}");
  std::vector<EntityType> types;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) {
      throw Error(ErrorCode::FormatError, "schema entry without a string 'name'");
    }
    std::string definition;
    if (item.contains("definition") && item["definition"].is_string()) {
      definition = item["definition"].get<std::string>();
    }
    types.push_back({item["name"].get<std::string>(), definition});
  }
  return EntitySchema(std::move(types));
}

EntitySchema load_schema_file(const std::string& path) { return load_schema(io::read_file(path)); }

nlohmann::json schema_to_json(const EntitySchema& schema) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : schema.types()) types.push_back({{"name", t.name}, {"definition", t.definition}});
  return {{"types", types}};
}

void conform_to_schema(LabeledSentence& s, const EntitySchema& schema) {
  std::size_t previous_end = 0;
  for (auto& span : s.spans) {
    if (span.start >= span.end || span.end > s.tokens.size()) {
      throw Error(ErrorCode::InvalidArgument, "sentence " + std::to_string(s.id) + ": span out of range");
    }
    if (span.start < previous_end) {
      throw Error(ErrorCode::InvalidArgument, "sentence " + std::to_string(s.id) + ": overlapping or unsorted spans");
    }
    previous_end = span.end;
    const auto idx = schema.find(span.entity_type);
    if (!idx) {
      throw Error(ErrorCode::UnknownSpanType,
                  "sentence " + std::to_string(s.id) + ": type '" + span.entity_type + "' not in schema");
    }
    span.entity_type = schema[*idx].name;
  }
}

void conform_to_schema(std::vector<LabeledSentence>& sentences, const EntitySchema& schema) {
  for (auto& s : sentences) conform_to_schema(s, schema);
}

// ---------------------------------------------------------------------------
// JSON lines

nlohmann::json sentence_to_json(const LabeledSentence& s) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& sp : s.spans) {
    spans.push_back({{"type", sp.entity_type}, {"start", sp.start}, {"end", sp.end}, {"surface", sp.surface}});
  }
  return {{"id", s.id}, {"tokens", s.tokens}, {"spans", spans}};
}

LabeledSentence sentence_from_json(const nlohmann::json& j) {
  try {
    LabeledSentence s;
    s.id = j.at("id").get<SentenceId>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("spans")) {
      for (const auto& sp : j.at("spans")) {
        EntitySpan span{sp.at("type").get<std::string>(), sp.at("start").get<std::size_t>(),
                        sp.at("end").get<std::size_t>(), ""};
        if (span.start >= span.end || span.end > s.tokens.size()) {
          throw Error(ErrorCode::FormatError, "span out of range in sentence " + std::to_string(s.id));
        }
        std::vector<std::string> covered(s.tokens.begin() + static_cast<std::ptrdiff_t>(span.start),
                                         s.tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
        span.surface = text::join(covered, " ");
        if (sp.contains("surface") && sp.at("surface").get<std::string>() != span.surface) {
          throw Error(ErrorCode::FormatError, "span surface does not match tokens in sentence " +
                                                  std::to_string(s.id));
        }
        s.spans.push_back(std::move(span));
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad sentence record: ") + e.what());
  }
}

std::string sentences_to_jsonl(std::span<const LabeledSentence> sentences) {
  std::string out;
  for (const auto& s : sentences) {
    out += sentence_to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledSentence> sentences_from_jsonl(std::string_view document) {
  std::vector<LabeledSentence> out;
  std::size_t pos = 0;
  while (pos < document.size()) {
    auto nl = document.find('\n', pos);
    if (nl == std::string_view::npos) nl = document.size();
    const auto line = text::trim(document.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(sentence_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("bad JSON line: ") + e.what());
    }
  }
  return out;
}

LabeledSentence sentence_from_text(std::string_view s, SentenceId id) {
  LabeledSentence out;
  out.id = id;
  out.tokens = text::split_whitespace(s);
  return out;
}

// ---------------------------------------------------------------------------

CorpusSplit split_store_finetune(std::span<const LabeledSentence> sentences, std::size_t store_size,
                                 std::uint64_t seed) {
  if (store_size > sentences.size()) {
    throw Error(ErrorCode::StoreSizeTooLarge, "store size " + std::to_string(store_size) + " exceeds " +
                                                  std::to_string(sentences.size()) + " sentences");
  }
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  // partial Fisher-Yates: the first store_size slots are a uniform sample
  for (std::size_t i = 0; i < store_size; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, order.size() - 1));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> in_store(sentences.size(), false);
  for (std::size_t i = 0; i < store_size; ++i) in_store[order[i]] = true;

  CorpusSplit split;
  split.seed = seed;
  split.store.reserve(store_size);
  split.finetune.reserve(sentences.size() - store_size);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    (in_store[i] ? split.store : split.finetune).push_back(sentences[i]);
  }
  return split;
}

}  // namespace ragner
