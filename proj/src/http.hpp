#pragma once

// Minimal JSON-over-HTTP POST used by the remote embedder and generator.

#include <chrono>
#include <string>

namespace ragner::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

enum class HttpFailure { None, Timeout, Connection };

struct HttpOutcome {
  HttpFailure failure = HttpFailure::None;
  std::string message;
  HttpResponse response;
};

/// `url` is scheme://host[:port]/path. Never throws on network failure;
/// throws Error(ConfigError) on a malformed url.
HttpOutcome post_json(const std::string& url, const std::string& body,
                      std::chrono::milliseconds timeout, const std::string& bearer_token);

/// 408, 429 and 5xx are worth retrying.
bool is_transient_status(int status) noexcept;

}  // namespace ragner::detail
