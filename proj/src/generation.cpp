#include "ragner/generation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "http.hpp"
#include "ragner/parallel.hpp"

namespace ragner {

void GeneratorSpec::validate() const {
  if (backend == BackendKind::RemoteCompletion && endpoint.empty()) {
    throw Error(ErrorCode::InvalidArgument, "remote generator needs an endpoint");
  }
  if (parallelism == 0) throw Error(ErrorCode::InvalidArgument, "generator parallelism must be >= 1");
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidArgument, "generator timeout must be positive");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
}

GenerationResult Generator::generate(const GenerationRequest& request) const {
  GenerationResult result;
  result.backend_tag = tag();
  const auto start = std::chrono::steady_clock::now();
  try {
    if (request.prompt == nullptr) throw Error(ErrorCode::InvalidArgument, "generation request without a prompt");
    result.completion_text = complete(request, result.attempt_count);
  } catch (const Error& e) {
    result.error_code = e.code();
    result.error = e.what();
  }
  result.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

class MockGoldGenerator final : public Generator {
 public:
  std::string tag() const override { return "mock-gold"; }

 protected:
  std::string complete(const GenerationRequest& request, std::size_t& attempts) const override {
    attempts = 1;
    if (request.gold == nullptr) throw Error(ErrorCode::MissingGold, "mock-gold backend needs the gold output");
    return render_output(rekey(*request.gold, request.prompt->schema));
  }
};

class MockEchoNearestGenerator final : public Generator {
 public:
  std::string tag() const override { return "mock-echo-nearest"; }

 protected:
  std::string complete(const GenerationRequest& request, std::size_t& attempts) const override {
    attempts = 1;
    const auto& prompt = *request.prompt;
    if (const auto* nearest = prompt.nearest_example()) return render_output(rekey(nearest->output, prompt.schema));
    return render_output(NerOutput::empty_for(prompt.schema));
  }
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(GeneratorSpec spec) : spec_(std::move(spec)) {}

  std::string tag() const override { return spec_.model.empty() ? "remote" : "remote:" + spec_.model; }

 protected:
  std::string complete(const GenerationRequest& request, std::size_t& attempts) const override {
    const std::string body = request_body(request.prompt->rendered);
    std::string last_error;
    bool last_was_timeout = false;
    for (attempts = 1;; ++attempts) {
      const auto outcome = detail::post_json(spec_.endpoint, body, spec_.timeout, spec_.api_key);
      bool transient = false;
      if (outcome.failure == detail::HttpFailure::None) {
        const int status = outcome.response.status;
        if (status >= 200 && status < 300) return extract_text(outcome.response.body);
        last_error = "generator returned HTTP " + std::to_string(status);
        last_was_timeout = false;
        transient = detail::is_transient_status(status);
      } else {
        last_error = outcome.message;
        last_was_timeout = outcome.failure == detail::HttpFailure::Timeout;
        transient = true;
      }
      if (!transient || attempts > spec_.max_retries) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50) * (1 << std::min<std::size_t>(attempts - 1, 5)));
    }
    throw Error(last_was_timeout ? ErrorCode::Timeout : ErrorCode::HttpError, last_error);
  }

 private:
  std::string request_body(const std::string& prompt) const {
    nlohmann::json j;
    if (spec_.wire == WireFormat::Chat) {
      j = {{"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
           {"max_tokens", spec_.max_tokens},
           {"temperature", spec_.temperature}};
    } else {
      j = {{"prompt", prompt}, {"max_tokens", spec_.max_tokens}, {"temperature", spec_.temperature}};
    }
    if (!spec_.model.empty()) j["model"] = spec_.model;
    return j.dump();
  }

  std::string extract_text(const std::string& body) const {
    try {
      const auto j = nlohmann::json::parse(body);
      if (spec_.wire == WireFormat::Chat) return j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("text")) return j.at("text").get<std::string>();
      // OpenAI-style completion response
      return j.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("malformed generator response: ") + e.what());
    }
  }

  GeneratorSpec spec_;
};

}  // namespace

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec) {
  spec.validate();
  switch (spec.backend) {
    case BackendKind::MockGold:
      return std::make_unique<MockGoldGenerator>();
    case BackendKind::MockEchoNearest:
      return std::make_unique<MockEchoNearestGenerator>();
    case BackendKind::RemoteCompletion:
      return std::make_unique<RemoteGenerator>(spec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown generator backend");
}

std::vector<GenerationResult> generate_batch(const Generator& generator, std::span<const GenerationRequest> requests,
                                             std::size_t parallelism) {
  std::vector<GenerationResult> results(requests.size());
  parallel_for(requests.size(), std::max<std::size_t>(parallelism, 1),
               [&](std::size_t i) { results[i] = generator.generate(requests[i]); });
  return results;
}

namespace {

double interpolated(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

LatencySummary summarize_latency(std::span<const double> latencies) {
  LatencySummary s;
  s.count = latencies.size();
  if (latencies.empty()) return s;
  std::vector<double> sorted(latencies.begin(), latencies.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(sorted.size());
  s.median = interpolated(sorted, 0.5);
  s.p90 = interpolated(sorted, 0.9);
  s.p99 = interpolated(sorted, 0.99);
  s.max = sorted.back();
  return s;
}

LatencySummary summarize_latency(std::span<const GenerationResult> results) {
  std::vector<double> values;
  values.reserve(results.size());
  for (const auto& r : results) values.push_back(r.latency_s);
  return summarize_latency(std::span<const double>(values));
}

nlohmann::json latency_to_json(const LatencySummary& s) {
  return {{"count", s.count}, {"mean_s", s.mean}, {"median_s", s.median}, {"p90_s", s.p90}, {"p99_s", s.p99},
          {"max_s", s.max}};
}

}  // namespace ragner
