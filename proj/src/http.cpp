#include "augimodels/http.hpp"

#include <httplib.h>

#include <stdexcept>
#include <thread>

namespace aug::net {
namespace {

class HttplibTransport final : public Transport {
public:
  explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

  HttpResponse post(const std::string& endpoint, const std::string& route,
                    const std::string& json_body, const Headers& headers) override {
    const auto scheme = endpoint.find("://");
    const auto path_start = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    const std::string base = endpoint.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(prefix + route, h, json_body, "application/json");
    if (!res) throw std::runtime_error("HTTP request failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

private:
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(std::chrono::milliseconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

PostOutcome post_with_retries(Transport& transport, const std::string& endpoint,
                              const std::string& route, const std::string& json_body,
                              const Headers& headers, const RetryPolicy& policy) {
  PostOutcome outcome;
  auto delay = policy.initial_backoff;
  for (int attempt = 0; attempt < policy.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    try {
      auto res = transport.post(endpoint, route, json_body, headers);
      if (res.status == 200) {
        outcome.ok = true;
        outcome.body = std::move(res.body);
        return outcome;
      }
      outcome.error = "HTTP status " + std::to_string(res.status);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  }
  return outcome;
}

}  // namespace aug::net
