// ragner: retrieval-augmented few-shot NER pipeline commands.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragner/app.hpp"
#include "ragner/config.hpp"
#include "ragner/error.hpp"
#include "ragner/evaluation.hpp"
#include "ragner/io.hpp"

namespace {

void print_error(const std::string& command, const std::string& code, const std::string& message) {
  const nlohmann::json j{{"error", {{"command", command}, {"code", code}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Retrieval-augmented few-shot NER pipeline"};
  cli.require_subcommand(1);
  cli.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  cli.add_option("-c,--config", config_path, "run config (JSON)");
  cli.add_option("--set", overrides, "override a config key, e.g. --set retriever.k=3")->take_all();

  auto* ingest = cli.add_subcommand("ingest", "parse and validate the corpus splits and the schema");
  auto* index = cli.add_subcommand("index", "embed the store and build the word and sentence indexes");
  auto* retrieve = cli.add_subcommand("retrieve", "retrieve in-prompt examples for queries");
  std::vector<std::string> queries;
  std::string retrieve_input;
  retrieve->add_option("-q,--query", queries, "query text (repeatable)");
  retrieve->add_option("-i,--input", retrieve_input, "corpus file of queries (BIO or JSONL)");
  auto* augment = cli.add_subcommand("augment", "write the finetuning dataset");
  auto* predict = cli.add_subcommand("predict", "retrieve, prompt, generate and parse");
  std::string predict_input;
  predict->add_option("-i,--input", predict_input, "corpus file (default: ingested test split)");
  auto* evaluate = cli.add_subcommand("evaluate", "micro-F1 report over predictions");
  std::string predictions;
  evaluate->add_option("-p,--predictions", predictions, "predictions JSONL (default: predict output)");
  auto* ablate = cli.add_subcommand("ablate", "run a configuration grid");
  std::string grid_path;
  ablate->add_option("-g,--grid", grid_path, "grid file (JSON)")->required();
  auto* show = cli.add_subcommand("config", "print the resolved config");

  CLI11_PARSE(cli, argc, argv);

  const auto* sub = cli.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    const auto loaded = ragner::load_config(config_path, overrides);
    const auto& config = loaded.config;
    if (sub == show) {
      std::cout << ragner::config_to_json(config).dump(2) << "\n";
    } else if (sub == ingest) {
      const auto s = ragner::app::cmd_ingest(config);
      for (const auto& [split, n] : s.sentences) std::cout << split << ": " << n << " sentences\n";
      if (s.dangling_inside_tags > 0) std::cout << "recovered " << s.dangling_inside_tags << " dangling I- tags\n";
    } else if (sub == index) {
      const auto s = ragner::app::cmd_index(config);
      std::printf("store: %zu sentences, %zu word records, %zu sentence records (%.2f s)\n", s.store_sentences,
                  s.word_records, s.sentence_records, s.build_seconds);
      if (s.finetune_sentences > 0) std::printf("finetune set: %zu sentences\n", s.finetune_sentences);
    } else if (sub == retrieve) {
      const auto n = ragner::app::cmd_retrieve(config, queries, retrieve_input);
      std::cout << n << " queries -> " << (config.paths.output_dir / "retrieval.jsonl").string() << "\n";
    } else if (sub == augment) {
      const auto s = ragner::app::cmd_augment(config);
      std::cout << s.records << " records, " << s.failures << " failures -> "
                << (config.paths.output_dir / "finetune.jsonl").string() << "\n";
    } else if (sub == predict) {
      const auto s = ragner::app::cmd_predict(config, predict_input);
      std::printf("%zu sentences, %zu generation failures, %zu parse failures\n", s.sentences, s.generation_failures,
                  s.parse_failures);
      std::printf("generation latency: median %.4f s, p90 %.4f s; search median %.3f ms\n", s.generation.median,
                  s.generation.p90, s.search.median * 1000.0);
    } else if (sub == evaluate) {
      std::string table;
      ragner::app::cmd_evaluate(config, predictions, &table);
      std::cout << table;
    } else if (sub == ablate) {
      const auto grid = nlohmann::json::parse(ragner::io::read_file(grid_path), nullptr, false);
      if (grid.is_discarded()) throw ragner::Error(ragner::ErrorCode::ConfigError, grid_path + " is not valid JSON");
      std::string table;
      ragner::app::cmd_ablate(loaded, grid, std::filesystem::absolute(grid_path).parent_path(), &table);
      std::cout << table;
    }
  } catch (const ragner::Error& e) {
    print_error(command, std::string(ragner::to_string(e.code())), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(command, "Internal", e.what());
    return 3;
  }
  return 0;
}
