#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragner/error.hpp"
#include "ragner/ner_output.hpp"
#include "ragner/promptkit.hpp"

namespace ragner {

enum class BackendKind { RemoteCompletion, MockGold, MockEchoNearest };

/// Request body shape for remote backends.
enum class WireFormat {
  Completion,  // {prompt, max_tokens, temperature} -> {text}
  Chat,        // {model, messages:[{role,content}], ...} -> {choices:[{message:{content}}]}
};

struct GeneratorSpec {
  BackendKind backend = BackendKind::MockGold;
  std::string endpoint;
  WireFormat wire = WireFormat::Completion;
  std::string model;
  std::string api_key;
  std::size_t max_tokens = 256;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_retries = 2;
  std::size_t parallelism = 4;

  void validate() const;  // throws InvalidArgument
};

struct GenerationRequest {
  SentenceId query_id = kNoSentence;
  const Prompt* prompt = nullptr;
  const NerOutput* gold = nullptr;  // only mock-gold reads it
};

struct GenerationResult {
  std::string completion_text;
  double latency_s = 0.0;
  std::string backend_tag;
  std::size_t attempt_count = 0;
  std::optional<ErrorCode> error_code;
  std::string error;

  bool ok() const noexcept { return !error_code.has_value(); }
};

/// Reentrant completion backend. generate() reports failures in the result
/// instead of throwing.
class Generator {
 public:
  virtual ~Generator() = default;
  GenerationResult generate(const GenerationRequest& request) const;
  virtual std::string tag() const = 0;

 protected:
  /// Returns the completion text; may throw Error. Sets attempts.
  virtual std::string complete(const GenerationRequest& request, std::size_t& attempts) const = 0;
};

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec);

/// Results are index-aligned with `requests`; at most `parallelism`
/// requests are in flight.
std::vector<GenerationResult> generate_batch(const Generator& generator,
                                             std::span<const GenerationRequest> requests,
                                             std::size_t parallelism);

struct LatencySummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// Percentiles use linear interpolation between closest ranks.
LatencySummary summarize_latency(std::span<const double> latencies);
LatencySummary summarize_latency(std::span<const GenerationResult> results);

nlohmann::json latency_to_json(const LatencySummary& summary);

}  // namespace ragner
