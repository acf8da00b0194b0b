#pragma once

// In-process HTTP server for the embedding and completion endpoints.

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace testutil {

class MockServer {
public:
  /// Every /embed request gets `vector` for each text; /complete answers
  /// with `completion(prompt)`.
  MockServer(std::vector<double> vector, std::function<std::string(const std::string&)> completion)
      : vector_(std::move(vector)), completion_(std::move(completion)) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < body["texts"].size(); ++i) rows.push_back(vector_);
      res.set_content(nlohmann::json{{"embeddings", rows}}.dump(), "application/json");
    });
    server_.Post("/complete", [this](const httplib::Request& req, httplib::Response& res) {
      ++complete_calls;
      last_authorization = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      res.set_content(nlohmann::json{{"text", completion_(body["prompt"].get<std::string>())}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> embed_calls{0};
  std::atomic<int> complete_calls{0};
  std::string last_authorization;

private:
  std::vector<double> vector_;
  std::function<std::string(const std::string&)> completion_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace testutil
