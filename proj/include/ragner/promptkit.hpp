#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragner/corpus.hpp"
#include "ragner/ner_output.hpp"

namespace ragner {

/// Prompt layout with {task_description}, {entity_definitions}, {examples}
/// and {query} placeholders.
///
/// Template files are plain text. Leading lines of the form
/// `#! key: value` set metadata (`template_id`, `task_description`; repeated
/// task_description lines are joined with a space). The rest is the body.
struct PromptTemplate {
  std::string template_id;
  std::string task_description;
  std::string body;

  static PromptTemplate default_template();
  static PromptTemplate parse(std::string_view document, std::string fallback_id = "custom");
  static PromptTemplate load(const std::filesystem::path& path);
};

/// Text of the shipped default template file.
std::string_view default_template_text();

struct PromptExample {
  std::string input;
  NerOutput output;

  bool operator==(const PromptExample&) const = default;
};

struct Prompt {
  std::string template_id;
  std::string task_description;
  EntitySchema schema;
  std::string entity_definitions;
  std::vector<PromptExample> examples;  // in rendered order
  std::string user_query;
  std::string rendered;
  bool most_similar_last = true;  // where the closest example sits in `examples`

  /// The most similar in-prompt example, if any.
  const PromptExample* nearest_example() const {
    if (examples.empty()) return nullptr;
    return most_similar_last ? &examples.back() : &examples.front();
  }
};

struct PromptOptions {
  /// Render the most similar example last, right above the query.
  bool most_similar_last = true;
};

/// `examples` arrive most-similar first (retrieval order). Each example's
/// output keys must equal the schema names in order, else SchemaMismatch.
Prompt build_prompt(const EntitySchema& schema,
                    const std::vector<std::pair<LabeledSentence, NerOutput>>& examples,
                    std::string_view query_text, const PromptTemplate& tmpl,
                    const PromptOptions& options = {});

/// `- name: definition` per line, schema order.
std::string render_definitions(const EntitySchema& schema);

/// "{product:[], time:[tomorrow]}". Values and keys are written bare unless
/// they contain structural characters, in which case they are double quoted.
std::string render_output(const NerOutput& output);

/// "Input: <text>\nOutput: <dict>"
std::string render_example(const LabeledSentence& sentence, const NerOutput& gold);

enum class Grounding { Off, Strict };

struct ParseResult {
  NerOutput output;                    // always has every schema key, in order
  bool no_dictionary = false;          // no balanced {...} region was found
  std::size_t dropped_ungrounded = 0;  // values removed by strict grounding
};

/// Total: never throws, whatever the completion contains.
ParseResult parse_output(std::string_view completion, const EntitySchema& schema,
                         std::string_view query_text, Grounding grounding = Grounding::Off);

}  // namespace ragner
