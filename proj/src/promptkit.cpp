#include "ragner/promptkit.hpp"

#include <algorithm>
#include <array>
#include <optional>

#include "ragner/error.hpp"
#include "ragner/io.hpp"
#include "ragner/text.hpp"

namespace ragner {

namespace {

// Kept byte-identical to data/templates/default-v1.txt.
constexpr std::string_view kDefaultTemplate = R"TEMPLATE(#! template_id: default-v1
#! task_description: You are a smart and intelligent Named Entity Recognition (NER) system. You will be provided with the definition of the entities to extract, the sentence from which to extract the entities and the format in which you are to display the output.
#! task_description: Display the output as a dictionary whose keys are the entity types listed under Entity Definitions, in the listed order, and whose values are lists of the entities of that type found in the sentence, copied exactly as they appear. Use an empty list for an entity type with no entities. Do not add keys that are not listed.
{task_description}

Entity Definitions:
{entity_definitions}

Examples:
{examples}

Input: {query}
Output:
)TEMPLATE";

}  // namespace

std::string_view default_template_text() { return kDefaultTemplate; }

// ---------------------------------------------------------------------------
// templates

PromptTemplate PromptTemplate::parse(std::string_view document, std::string fallback_id) {
  PromptTemplate t;
  t.template_id = std::move(fallback_id);
  std::size_t pos = 0;
  std::vector<std::string> description;
  while (pos < document.size() && document.substr(pos, 2) == "#!") {
    auto nl = document.find('\n', pos);
    if (nl == std::string_view::npos) nl = document.size();
    const auto line = document.substr(pos + 2, nl - pos - 2);
    pos = std::min(nl + 1, document.size());
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = text::trim(line.substr(0, colon));
    const auto value = std::string(text::trim(line.substr(colon + 1)));
    if (key == "template_id") {
      t.template_id = value;
    } else if (key == "task_description") {
      description.push_back(value);
    }
  }
  t.task_description = text::join(description, " ");
  t.body = std::string(document.substr(pos));
  if (!t.body.empty() && t.body.back() == '\n') t.body.pop_back();
  return t;
}

PromptTemplate PromptTemplate::default_template() { return parse(kDefaultTemplate, "default-v1"); }

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.stem().string());
}

// ---------------------------------------------------------------------------
// rendering

namespace {

constexpr std::string_view kStructural = "{}[],:\"'\\";

bool is_null_word(std::string_view s) {
  const auto l = text::to_lower(text::trim(s));
  return l == "none" || l == "null" || l == "n/a";
}

bool bare_safe(std::string_view s) {
  if (s.empty() || text::trim(s).size() != s.size()) return false;
  if (s.find_first_of(kStructural) != std::string_view::npos) return false;
  return !is_null_word(s);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_atom(std::string_view s) { return bare_safe(s) ? std::string(s) : quote(s); }

std::string substitute(std::string_view body, const std::array<std::pair<std::string_view, std::string>, 4>& values) {
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      bool replaced = false;
      for (const auto& [name, value] : values) {
        if (body.substr(i + 1, name.size()) == name && i + 1 + name.size() < body.size() &&
            body[i + 1 + name.size()] == '}') {
          out += value;
          i += name.size() + 2;
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out.push_back(body[i++]);
  }
  return out;
}

}  // namespace

std::string render_output(const NerOutput& output) {
  std::string out = "{";
  for (std::size_t i = 0; i < output.entries.size(); ++i) {
    const auto& [key, values] = output.entries[i];
    if (i) out += ", ";
    out += render_atom(key);
    out += ":[";
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (j) out += ", ";
      out += render_atom(values[j]);
    }
    out += "]";
  }
  out += "}";
  return out;
}

std::string render_example(const LabeledSentence& sentence, const NerOutput& gold) {
  return "Input: " + sentence.text() + "\nOutput: " + render_output(gold);
}

std::string render_definitions(const EntitySchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) out += '\n';
    out += "- " + schema[i].name + ": " + schema[i].definition;
  }
  return out;
}

Prompt build_prompt(const EntitySchema& schema, const std::vector<std::pair<LabeledSentence, NerOutput>>& examples,
                    std::string_view query_text, const PromptTemplate& tmpl, const PromptOptions& options) {
  const auto names = schema.names();
  Prompt p;
  p.template_id = tmpl.template_id;
  p.task_description = tmpl.task_description;
  p.schema = schema;
  p.entity_definitions = render_definitions(schema);
  p.user_query = std::string(query_text);
  p.examples.reserve(examples.size());
  for (const auto& [sentence, output] : examples) {
    if (output.keys() != names) {
      throw Error(ErrorCode::SchemaMismatch,
                  "example " + std::to_string(sentence.id) + " output keys do not follow the prompt schema");
    }
    p.examples.push_back({sentence.text(), output});
  }
  if (options.most_similar_last) std::reverse(p.examples.begin(), p.examples.end());

  std::string rendered_examples;
  for (std::size_t i = 0; i < p.examples.size(); ++i) {
    if (i) rendered_examples += "\n\n";
    rendered_examples += "Input: " + p.examples[i].input + "\nOutput: " + render_output(p.examples[i].output);
  }
  p.rendered = substitute(tmpl.body, {{{"task_description", p.task_description},
                                       {"entity_definitions", p.entity_definitions},
                                       {"examples", rendered_examples},
                                       {"query", p.user_query}}});
  p.most_similar_last = options.most_similar_last;
  return p;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

/// Quotes only delimit strings when they start an atom and end right before
/// a structural character, so apostrophes inside bare words are left alone.
class Cursor {
 public:
  Cursor(std::string_view s, std::size_t begin, std::size_t end) : s_(s), i_(begin), end_(end) {}

  bool done() const { return i_ >= end_; }
  char peek() const { return done() ? '\0' : s_[i_]; }
  void advance() {
    if (!done()) ++i_;
  }
  std::size_t pos() const { return i_; }

  void skip_ws() {
    while (!done() && is_ws(s_[i_])) ++i_;
  }

  bool at_quote() const { return !done() && (s_[i_] == '"' || s_[i_] == '\''); }

  /// Position just after the closing quote of the string opening at `from`,
  /// or nullopt when it never closes.
  std::optional<std::size_t> string_end(std::size_t from) const {
    const char q = s_[from];
    std::size_t j = from + 1;
    while (j < end_) {
      if (s_[j] == '\\') {
        j += 2;
        continue;
      }
      if (s_[j] == q) {
        std::size_t k = j + 1;
        while (k < end_ && is_ws(s_[k])) ++k;
        if (k >= end_ || s_[k] == ',' || s_[k] == ']' || s_[k] == '}' || s_[k] == ':') return j + 1;
      }
      ++j;
    }
    return std::nullopt;
  }

  /// Reads a quoted atom; an unterminated one runs to the end.
  std::string read_quoted() {
    const auto stop = string_end(i_);
    const std::size_t close = stop ? *stop - 1 : end_;
    std::string out;
    for (std::size_t j = i_ + 1; j < close; ++j) {
      if (s_[j] == '\\' && j + 1 < close) {
        const char n = s_[++j];
        out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
      } else {
        out.push_back(s_[j]);
      }
    }
    i_ = stop ? *stop : end_;
    return out;
  }

  /// Reads until one of `stops` (outside nothing; bare atoms have no nesting).
  std::string read_bare(std::string_view stops) {
    const std::size_t start = i_;
    while (!done() && stops.find(s_[i_]) == std::string_view::npos) ++i_;
    return std::string(text::trim(s_.substr(start, i_ - start)));
  }

  /// Skips a bracketed region starting at the current open bracket.
  void skip_group() {
    int depth = 0;
    while (!done()) {
      const char c = s_[i_];
      if (at_quote() && opens_string()) {
        const auto stop = string_end(i_);
        i_ = stop ? *stop : end_;
        continue;
      }
      if (c == '{' || c == '[') ++depth;
      if (c == '}' || c == ']') {
        --depth;
        if (depth <= 0) {
          ++i_;
          return;
        }
      }
      ++i_;
    }
  }

  /// Skips to the next top-level comma (consumed) or the end.
  void skip_to_next_item() {
    while (!done()) {
      const char c = s_[i_];
      if (c == ',') {
        ++i_;
        return;
      }
      if (c == '{' || c == '[') {
        skip_group();
        continue;
      }
      ++i_;
    }
  }

  bool opens_string() const {
    std::size_t j = i_;
    while (j > 0) {
      --j;
      if (is_ws(s_[j])) continue;
      const char c = s_[j];
      return c == '{' || c == '[' || c == ',' || c == ':';
    }
    return true;
  }

 private:
  std::string_view s_;
  std::size_t i_;
  std::size_t end_;
};

/// First '{' whose region balances; returns [open, close] positions.
std::optional<std::pair<std::size_t, std::size_t>> find_dictionary(std::string_view s) {
  for (std::size_t open = s.find('{'); open != std::string_view::npos; open = s.find('{', open + 1)) {
    Cursor c(s, open, s.size());
    int depth = 0;
    while (!c.done()) {
      const char ch = c.peek();
      if (c.at_quote() && c.opens_string()) {
        if (const auto stop = c.string_end(c.pos())) {
          while (c.pos() < *stop) c.advance();
          continue;
        }
        c.advance();  // stray quote, treat as text
        continue;
      }
      if (ch == '{') ++depth;
      if (ch == '}') {
        if (--depth == 0) return std::make_pair(open, c.pos());
      }
      c.advance();
    }
  }
  return std::nullopt;
}

std::vector<std::string> parse_value(Cursor& c) {
  std::vector<std::string> values;
  c.skip_ws();
  if (c.peek() == '[') {
    c.advance();
    for (;;) {
      c.skip_ws();
      if (c.done()) break;
      if (c.peek() == ']') {
        c.advance();
        break;
      }
      if (c.peek() == ',') {
        c.advance();
        continue;
      }
      if (c.peek() == '[' || c.peek() == '{') {
        c.skip_group();
        continue;
      }
      if (c.at_quote()) {
        auto v = c.read_quoted();
        if (!text::trim(v).empty()) values.push_back(std::string(text::trim(v)));
        continue;
      }
      auto v = c.read_bare(",]");
      if (!v.empty() && !is_null_word(v)) values.push_back(std::move(v));
    }
  } else if (c.peek() == '{') {
    c.skip_group();
  } else if (c.at_quote()) {
    auto v = c.read_quoted();
    if (!text::trim(v).empty()) values.push_back(std::string(text::trim(v)));
  } else {
    auto v = c.read_bare(",}");
    if (!v.empty() && !is_null_word(v)) values.push_back(std::move(v));
  }
  return values;
}

}  // namespace

ParseResult parse_output(std::string_view completion, const EntitySchema& schema, std::string_view query_text,
                         Grounding grounding) {
  ParseResult result;
  result.output = NerOutput::empty_for(schema);
  const auto region = find_dictionary(completion);
  if (!region) {
    result.no_dictionary = true;
    return result;
  }

  Cursor c(completion, region->first + 1, region->second);
  while (!c.done()) {
    c.skip_ws();
    if (c.done()) break;
    if (c.peek() == ',') {
      c.advance();
      continue;
    }
    std::string key;
    if (c.at_quote()) {
      key = c.read_quoted();
    } else if (c.peek() == '[' || c.peek() == '{') {
      c.skip_group();
      continue;
    } else {
      key = c.read_bare(":,");
    }
    c.skip_ws();
    if (c.peek() != ':') {
      c.skip_to_next_item();
      continue;
    }
    c.advance();
    auto values = parse_value(c);
    c.skip_to_next_item();

    key = std::string(text::trim(key));
    if (const auto idx = schema.find(key); idx && !key.empty()) {
      auto& dst = result.output.entries[*idx].second;
      dst.insert(dst.end(), std::make_move_iterator(values.begin()), std::make_move_iterator(values.end()));
    } else {
      result.output.unrecognized.emplace_back(std::move(key), std::move(values));
    }
  }

  if (grounding == Grounding::Strict) {
    for (auto& [key, values] : result.output.entries) {
      const auto before = values.size();
      std::erase_if(values, [&](const std::string& v) { return !text::icontains(query_text, v); });
      result.dropped_ungrounded += before - values.size();
    }
  }
  return result;
}

}  // namespace ragner
