#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragner/augment.hpp"
#include "ragner/embedder.hpp"
#include "ragner/generation.hpp"
#include "ragner/promptkit.hpp"
#include "ragner/retriever.hpp"
#include "ragner/vector_index.hpp"

namespace ragner {

struct RunPaths {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  std::filesystem::path schema;
  std::filesystem::path output_dir = "run";
  std::filesystem::path store_dir;  // ingest/index artifacts; empty: output_dir
  std::filesystem::path template_file;  // empty: built-in default

  std::filesystem::path artifacts() const { return store_dir.empty() ? output_dir : store_dir; }
};

enum class StoreMode {
  Splits,  // every sentence of the listed splits
  Sample,  // store_size sentences drawn from train; the rest is the finetune set
};

struct StoreConfig {
  StoreMode mode = StoreMode::Splits;
  std::vector<std::string> splits{"train", "dev"};
  std::size_t store_size = 500;
};

struct EmbedderConfig {
  ProviderKind provider = ProviderKind::PrecomputedFile;
  std::filesystem::path path;
  std::string model_name = "bge-base-en";
  std::size_t dimension = 768;
  std::filesystem::path stopwords_file;
  WordSelection store_words = WordSelection::EntityOnly;
  RemoteEmbedderOptions remote;
};

struct EvalConfig {
  Grounding grounding = Grounding::Off;
  bool dedupe = false;
  bool positional = false;
};

struct RunConfig {
  std::uint64_t seed = 13;
  std::string domain;
  RunPaths paths;
  StoreConfig store;
  EmbedderConfig embedder;
  IndexOptions index;
  RetrieverConfig retriever;
  PromptOptions prompt;
  GeneratorSpec generator;
  AugmentConfig augment;
  EvalConfig eval;
  std::size_t parallelism = 1;
};

/// Every key with its default value.
nlohmann::json default_config_json();

/// Sets `dotted.path=value`; value is parsed as JSON when it parses, else
/// taken as a string. Throws ConfigError.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Merges `doc` over the defaults and validates. Unknown keys are a
/// ConfigError. Relative paths are resolved against `base_dir`.
/// Secrets and endpoints may come from RAGNER_API_KEY,
/// RAGNER_GENERATOR_ENDPOINT and RAGNER_EMBEDDER_ENDPOINT.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Round-trips through config_from_json. Secrets are omitted.
nlohmann::json config_to_json(const RunConfig& config);

/// SHA-256 of the canonical resolved config.
std::string config_hash(const RunConfig& config);

struct LoadedConfig {
  RunConfig config;
  nlohmann::json merged;  // defaults + file + overrides, before path resolution
  std::filesystem::path base_dir;
};

LoadedConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace ragner
