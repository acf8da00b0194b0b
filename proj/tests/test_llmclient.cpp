#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "augimodels/errors.hpp"
#include "augimodels/llmclient.hpp"
#include "helpers.hpp"
#include "mock_server.hpp"

using namespace aug;
using namespace aug::llm;

namespace {

CompletionRequest request(std::string prompt) {
  CompletionRequest r;
  r.prompt = std::move(prompt);
  return r;
}

Client::Options options(Mode mode, const testutil::TempDir& dir, std::string endpoint = "http://unused") {
  Client::Options o;
  o.mode = mode;
  o.replay_dir = dir.path();
  o.endpoint = std::move(endpoint);
  o.retry = {2, std::chrono::milliseconds(1)};
  return o;
}

}  // namespace

TEST_SUITE("llmclient") {
  TEST_CASE("canonical request and key") {
    const auto r = request("hello");
    CHECK(r.canonical_json() == R"({"max_tokens":1024,"prompt":"hello","temperature":0.0})");
    CHECK(r.key().size() == 64);
    CHECK(r.key().find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(r.key() == request("hello").key());
    CHECK(r.key() != request("hello ").key());
    auto hot = r;
    hot.temperature = 0.7;
    CHECK(hot.key() != r.key());
    CHECK_THROWS_AS(request("").validate(), InvalidArgument);
  }

  TEST_CASE("record then replay round-trips five prompts") {
    testutil::TempDir dir;
    auto transport = std::make_shared<testutil::ScriptedTransport>([](const std::string& route, const std::string& body) {
      CHECK(route == "/complete");
      const auto prompt = nlohmann::json::parse(body)["prompt"].get<std::string>();
      return net::HttpResponse{200, nlohmann::json{{"text", "answer to " + prompt + "\n\xC3\xA9"}}.dump()};
    });
    auto rec_opt = options(Mode::Record, dir);
    rec_opt.transport = transport;
    rec_opt.bearer_token = "sekrit";
    Client recorder(rec_opt);

    std::set<std::string> keys;
    std::vector<std::string> answers;
    for (int i = 0; i < 5; ++i) {
      const auto r = request("prompt " + std::to_string(i));
      answers.push_back(recorder.complete(r));
      keys.insert(r.key());
    }
    CHECK(keys.size() == 5);
    CHECK(transport->calls == 5);
    REQUIRE(transport->last_headers.size() == 1);
    CHECK(transport->last_headers[0].second == "Bearer sekrit");

    Client replay(options(Mode::Replay, dir, ""));
    for (int i = 0; i < 5; ++i) CHECK(replay.complete(request("prompt " + std::to_string(i))) == answers[i]);
    CHECK(replay.network_calls() == 0);
    CHECK(testutil::slurp(dir / (request("prompt 0").key() + ".txt")) == answers[0]);

    const auto missing = request("never recorded");
    try {
      replay.complete(missing);
      FAIL("expected ReplayMiss");
    } catch (const ReplayMiss& e) {
      CHECK(e.key() == missing.key());
      CHECK(std::string(e.what()).find(missing.key()) != std::string::npos);
    }
  }

  TEST_CASE("live mode over HTTP with a bearer token") {
    testutil::MockServer server({0}, [](const std::string& p) { return "1. " + p; });
    testutil::TempDir dir;
    auto opt = options(Mode::Live, dir, server.endpoint());
    opt.bearer_token = "tok";
    Client client(opt);
    CHECK(client.complete(request("x")) == "1. x");
    CHECK(server.last_authorization == "Bearer tok");
    CHECK(client.network_calls() == 1);
  }

  TEST_CASE("failures") {
    testutil::TempDir dir;
    auto down = std::make_shared<testutil::ScriptedTransport>(
        [](const std::string&, const std::string&) { return net::HttpResponse{500, "oops"}; });
    auto opt = options(Mode::Live, dir);
    opt.transport = down;
    Client client(opt);
    CHECK_THROWS_AS(client.complete(request("x")), LLMUnavailable);
    CHECK(down->calls == 2);

    auto junk = std::make_shared<testutil::ScriptedTransport>(
        [](const std::string&, const std::string&) { return net::HttpResponse{200, "not json"}; });
    opt.transport = junk;
    Client junk_client(opt);
    CHECK_THROWS_AS(junk_client.complete(request("x")), LLMUnavailable);

    Client::Options no_dir;
    no_dir.mode = Mode::Replay;
    CHECK_THROWS_AS(Client{no_dir}, InvalidArgument);
    CHECK_THROWS_AS(parse_mode("offline"), InvalidArgument);
  }

  TEST_CASE("numbered list parsing") {
    CHECK(parse_numbered_list("1. bad\n2. poor\n3. awful") == std::vector<std::string>{"bad", "poor", "awful"});
    CHECK(parse_numbered_list("1. bad\n2) poor") == std::vector<std::string>{"bad", "poor"});
    CHECK(parse_numbered_list("no numbering here").empty());
    CHECK(parse_numbered_list("  3.   \"quoted\"  \r\n4.\n5.x\n") == std::vector<std::string>{"quoted"});

    const auto text = testutil::slurp(testutil::fixture_dir() / "numbered_100.txt");
    std::size_t numbered_lines = 0;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const auto line = text.substr(start, end - start);
      if (!line.empty() && line[0] >= '0' && line[0] <= '9') ++numbered_lines;
      start = end + 1;
    }
    const auto items = parse_numbered_list(text);
    CHECK(numbered_lines == 100);
    CHECK(items.size() == 100);
    CHECK(items.back() == "phrase number 100");
  }
}
