#include "http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ragner/error.hpp"

namespace ragner::detail {

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpOutcome post_json(const std::string& url, const std::string& body, std::chrono::milliseconds timeout,
                      const std::string& bearer_token) {
  const auto parts = split_url(url);
  httplib::Client client(parts.base);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  HttpOutcome outcome;
  auto res = client.Post(parts.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    outcome.failure = (err == httplib::Error::Read || err == httplib::Error::Write ||
                       err == httplib::Error::ConnectionTimeout)
                          ? HttpFailure::Timeout
                          : HttpFailure::Connection;
    outcome.message = httplib::to_string(err);
    return outcome;
  }
  outcome.response.status = res->status;
  outcome.response.body = res->body;
  return outcome;
}

bool is_transient_status(int status) noexcept {
  return status == 408 || status == 429 || (status >= 500 && status <= 599);
}

}  // namespace ragner::detail
