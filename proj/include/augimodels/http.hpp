#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace aug::net {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal POST transport. Implementations throw on connection failure.
class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& endpoint, const std::string& route,
                            const std::string& json_body, const Headers& headers) = 0;
};

/// cpp-httplib backed transport. `endpoint` is "http://host:port[/prefix]".
std::shared_ptr<Transport> make_http_transport(
    std::chrono::milliseconds timeout = std::chrono::seconds(60));

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

struct PostOutcome {
  bool ok = false;
  std::string body;
  std::string error;  // last failure when !ok
};

/// POSTs until a 200 response or the attempts run out, doubling the delay
/// between attempts.
PostOutcome post_with_retries(Transport& transport, const std::string& endpoint,
                              const std::string& route, const std::string& json_body,
                              const Headers& headers, const RetryPolicy& policy);

}  // namespace aug::net
