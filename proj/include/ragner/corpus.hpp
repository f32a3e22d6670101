#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ragner {

using SentenceId = std::uint32_t;

/// Id carried by ad-hoc queries that do not belong to any corpus.
inline constexpr SentenceId kNoSentence = std::numeric_limits<SentenceId>::max();

struct EntitySpan {
  std::string entity_type;
  std::size_t start = 0;  // inclusive token index
  std::size_t end = 0;    // exclusive token index
  std::string surface;    // tokens[start:end] joined by single spaces

  bool operator==(const EntitySpan&) const = default;
};

struct LabeledSentence {
  SentenceId id = 0;
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;

  /// Tokens joined by single spaces; this is the text every provider embeds.
  std::string text() const;

  bool operator==(const LabeledSentence&) const = default;
};

struct EntityType {
  std::string name;
  std::string definition;

  bool operator==(const EntityType&) const = default;
};

/// Canonical comparison key for type names: lowercase with whitespace,
/// underscores and hyphens removed ("Political_Party" == "politicalparty").
std::string fold_type_name(std::string_view name);

/// Ordered list of entity types. The order is the prompt order.
class EntitySchema {
 public:
  EntitySchema() = default;

  /// Throws DuplicateTypeName (folded names collide) or EmptyDefinition.
  explicit EntitySchema(std::vector<EntityType> types);

  const std::vector<EntityType>& types() const noexcept { return types_; }
  std::size_t size() const noexcept { return types_.size(); }
  bool empty() const noexcept { return types_.empty(); }
  const EntityType& operator[](std::size_t i) const { return types_[i]; }

  std::vector<std::string> names() const;

  /// Position of a type by folded-name lookup.
  std::optional<std::size_t> find(std::string_view name) const;

  /// New schema containing types_[order[0]], types_[order[1]], ...
  EntitySchema select(std::span<const std::size_t> order) const;

  bool operator==(const EntitySchema&) const = default;

 private:
  std::vector<EntityType> types_;
};

struct ParsedCorpus {
  std::vector<LabeledSentence> sentences;
  std::size_t dangling_inside_tags = 0;  // I-X recovered as B-X
};

/// Parses `token<WS>tag` lines with blank-line sentence breaks. Ids are
/// assigned sequentially from `first_id`. Throws MalformedLine.
ParsedCorpus parse_bio(std::string_view document, SentenceId first_id = 0);

/// Renders sentences back to BIO lines (tab separated). Whitespace inside
/// type names is dropped, so types need conform_to_schema after re-parsing.
std::string to_bio(std::span<const LabeledSentence> sentences);

/// Schema documents are JSON: either an array of {name, definition} objects
/// or an object with a "types" array of the same.
EntitySchema load_schema(std::string_view document);
EntitySchema load_schema_file(const std::string& path);
nlohmann::json schema_to_json(const EntitySchema& schema);

/// Checks the LabeledSentence invariants, rewriting each span's type to the
/// schema's canonical spelling. Throws UnknownSpanType or InvalidArgument.
void conform_to_schema(LabeledSentence& sentence, const EntitySchema& schema);
void conform_to_schema(std::vector<LabeledSentence>& sentences, const EntitySchema& schema);

nlohmann::json sentence_to_json(const LabeledSentence& sentence);
LabeledSentence sentence_from_json(const nlohmann::json& j);

std::string sentences_to_jsonl(std::span<const LabeledSentence> sentences);
std::vector<LabeledSentence> sentences_from_jsonl(std::string_view document);

/// Whitespace tokenization for ad-hoc query text.
LabeledSentence sentence_from_text(std::string_view text, SentenceId id = kNoSentence);

struct CorpusSplit {
  std::vector<LabeledSentence> store;
  std::vector<LabeledSentence> finetune;
  std::uint64_t seed = 0;
};

/// Uniformly random store subset of exactly `store_size` sentences. Both
/// halves keep the input order. Throws StoreSizeTooLarge.
CorpusSplit split_store_finetune(std::span<const LabeledSentence> sentences,
                                 std::size_t store_size, std::uint64_t seed);

}  // namespace ragner
