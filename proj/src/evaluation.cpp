#include "ragner/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "ragner/error.hpp"
#include "ragner/text.hpp"

namespace ragner {

EntityMultiset to_multiset(const NerOutput& output) {
  EntityMultiset out;
  for (const auto& [type, values] : output.entries) {
    for (const auto& v : values) ++out[{type, text::normalize_entity(v)}];
  }
  return out;
}

double Counts::precision() const noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Counts::recall() const noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Counts::f1() const noexcept {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Counts& Counts::operator+=(const Counts& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

namespace {

std::vector<std::string> sorted_keys(const NerOutput& o) {
  auto keys = o.keys();
  std::sort(keys.begin(), keys.end());
  return keys;
}

/// Key order of the first record; every gold and parsed prediction must use the same key set.
std::vector<std::string> check_schema(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no prediction records to score");
  const auto order = records.front().gold.keys();
  auto expected = order;
  std::sort(expected.begin(), expected.end());
  for (const auto& r : records) {
    if (sorted_keys(r.gold) != expected || (!r.parse_failed && sorted_keys(r.predicted) != expected)) {
      throw Error(ErrorCode::SchemaMismatchAcrossRecords,
                  "sentence " + std::to_string(r.sentence_id) + " uses a different key set");
    }
  }
  return order;
}

EvalReport assemble(const std::vector<std::string>& order, const std::unordered_map<std::string, Counts>& per_type,
                    std::size_t n_sentences, std::size_t n_failures) {
  EvalReport report;
  report.n_sentences = n_sentences;
  report.n_parse_failures = n_failures;
  for (const auto& key : order) {
    const auto it = per_type.find(key);
    const Counts c = it == per_type.end() ? Counts{} : it->second;
    report.per_type.emplace_back(key, c);
    report.micro += c;
  }
  return report;
}

EntityMultiset deduped(EntityMultiset m) {
  for (auto& [_, n] : m) n = 1;
  return m;
}

}  // namespace

EvalReport score(std::span<const PredictionRecord> records, const ScoreOptions& options) {
  const auto order = check_schema(records);
  std::unordered_map<std::string, Counts> per_type;
  std::size_t failures = 0;
  for (const auto& r : records) {
    auto gold = to_multiset(r.gold);
    auto pred = r.parse_failed ? EntityMultiset{} : to_multiset(r.predicted);
    if (r.parse_failed) ++failures;
    if (options.dedupe) {
      gold = deduped(std::move(gold));
      pred = deduped(std::move(pred));
    }
    for (const auto& [key, n] : gold) {
      const auto it = pred.find(key);
      const std::size_t m = it == pred.end() ? 0 : it->second;
      auto& c = per_type[key.first];
      c.tp += std::min(n, m);
      c.fn += n - std::min(n, m);
    }
    for (const auto& [key, m] : pred) {
      const auto it = gold.find(key);
      const std::size_t n = it == gold.end() ? 0 : it->second;
      if (m > n) per_type[key.first].fp += m - n;
    }
  }
  return assemble(order, per_type, records.size(), failures);
}

namespace {

using Position = std::pair<std::size_t, std::size_t>;  // token [start, end)

std::optional<Position> locate(const LabeledSentence& s, const std::string& target, const std::set<Position>& used) {
  if (target.empty()) return std::nullopt;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    std::string joined;
    for (std::size_t j = i; j < s.tokens.size(); ++j) {
      if (j > i) joined += ' ';
      joined += s.tokens[j];
      const auto norm = text::normalize_entity(joined);
      if (norm.size() > target.size()) break;
      if (norm == target && !used.contains({i, j + 1})) return Position{i, j + 1};
    }
  }
  return std::nullopt;
}

}  // namespace

EvalReport score_positional(std::span<const LabeledSentence> sentences, std::span<const PredictionRecord> records,
                            const EntitySchema& schema) {
  const auto order = check_schema(records);
  std::unordered_map<SentenceId, const LabeledSentence*> by_id;
  for (const auto& s : sentences) by_id.emplace(s.id, &s);

  std::unordered_map<std::string, Counts> per_type;
  std::size_t failures = 0;
  for (const auto& r : records) {
    const auto it = by_id.find(r.sentence_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::MissingEntry, "no sentence " + std::to_string(r.sentence_id) + " for positional scoring");
    }
    const auto& sentence = *it->second;
    auto canonical = [&](const std::string& type) {
      const auto pos = schema.find(type);
      if (!pos) throw Error(ErrorCode::UnknownSpanType, "type '" + type + "' is not in the schema");
      return schema[*pos].name;
    };

    std::multiset<std::tuple<std::string, std::size_t, std::size_t>> gold;
    for (const auto& span : sentence.spans) gold.emplace(canonical(span.entity_type), span.start, span.end);

    std::vector<std::tuple<std::string, std::size_t, std::size_t>> predicted;
    if (r.parse_failed) {
      ++failures;
    } else {
      std::set<Position> used;
      for (const auto& [type, values] : r.predicted.entries) {
        const auto name = canonical(type);
        for (const auto& v : values) {
          if (const auto pos = locate(sentence, text::normalize_entity(v), used)) {
            used.insert(*pos);
            predicted.emplace_back(name, pos->first, pos->second);
          } else {
            ++per_type[name].fp;
          }
        }
      }
    }
    for (const auto& p : predicted) {
      const auto g = gold.find(p);
      if (g != gold.end()) {
        ++per_type[std::get<0>(p)].tp;
        gold.erase(g);
      } else {
        ++per_type[std::get<0>(p)].fp;
      }
    }
    for (const auto& g : gold) ++per_type[std::get<0>(g)].fn;
  }

  // gold keys may be display names; map counts onto them
  std::unordered_map<std::string, Counts> keyed;
  for (const auto& key : order) {
    const auto pos = schema.find(key);
    if (pos) keyed[key] = per_type[schema[*pos].name];
  }
  return assemble(order, keyed, records.size(), failures);
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::string format_report(const EvalReport& report, const std::string& title) {
  std::size_t width = 5;
  for (const auto& [type, _] : report.per_type) width = std::max(width, type.size());
  std::string out = title + "\n";
  char line[512];
  auto row = [&](const std::string& name, const Counts& c) {
    std::snprintf(line, sizeof line, "%-*s  %7s  %7s  %7s  %6zu  %6zu  %6zu\n", static_cast<int>(width), name.c_str(),
                  percent(c.precision()).c_str(), percent(c.recall()).c_str(), percent(c.f1()).c_str(), c.tp, c.fp,
                  c.fn);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-*s  %7s  %7s  %7s  %6s  %6s  %6s\n", static_cast<int>(width), "type", "P", "R",
                "F1", "tp", "fp", "fn");
  out += line;
  for (const auto& [type, c] : report.per_type) row(type, c);
  row("micro", report.micro);
  std::snprintf(line, sizeof line, "sentences: %zu  parse failures: %zu\n", report.n_sentences,
                report.n_parse_failures);
  out += line;
  return out;
}

namespace {

nlohmann::json counts_to_json(const Counts& c) {
  return {{"tp", c.tp},           {"fp", c.fp},     {"fn", c.fn},
          {"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()}};
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_type = nlohmann::json::object();
  nlohmann::json order = nlohmann::json::array();
  for (const auto& [type, c] : report.per_type) {
    per_type[type] = counts_to_json(c);
    order.push_back(type);
  }
  return {{"micro", counts_to_json(report.micro)},
          {"per_type", per_type},
          {"type_order", order},
          {"n_sentences", report.n_sentences},
          {"n_parse_failures", report.n_parse_failures}};
}

nlohmann::json prediction_to_json(const PredictionRecord& record) {
  return {{"sentence_id", record.sentence_id},
          {"gold", ner_output_to_json(record.gold)},
          {"predicted", ner_output_to_json(record.predicted)},
          {"parse_failed", record.parse_failed}};
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
  try {
    PredictionRecord r;
    r.sentence_id = j.at("sentence_id").get<SentenceId>();
    r.gold = ner_output_from_json(j.at("gold"));
    r.predicted = ner_output_from_json(j.at("predicted"));
    r.parse_failed = j.value("parse_failed", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad prediction record: ") + e.what());
  }
}

}  // namespace ragner
