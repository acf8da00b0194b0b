#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "augimodels/http.hpp"

namespace aug::llm {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 1024;
  double temperature = 0.0;

  void validate() const;
  /// Compact JSON with keys in a fixed order; the replay key hashes this.
  std::string canonical_json() const;
  /// Lowercase hex SHA-256 of canonical_json().
  std::string key() const;
};

/// Completions on disk: `<key>.txt` holds the raw completion bytes and
/// `<key>.req.json` the canonical request.
class ReplayStore {
public:
  explicit ReplayStore(std::filesystem::path directory);

  std::optional<std::string> find(const CompletionRequest& request) const;
  void put(const CompletionRequest& request, std::string_view completion);
  const std::filesystem::path& directory() const noexcept { return dir_; }

private:
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

enum class Mode { Live, Record, Replay };
Mode parse_mode(std::string_view name);

/// Completion client: POST <endpoint>/complete with
/// {"prompt", "max_tokens", "temperature"} -> {"text"}.
class Client {
public:
  struct Options {
    std::string endpoint;
    Mode mode = Mode::Live;
    std::optional<std::filesystem::path> replay_dir;
    std::string bearer_token;  // empty: no Authorization header
    net::RetryPolicy retry;
    std::shared_ptr<net::Transport> transport;  // default: HTTP
  };

  explicit Client(Options options);

  /// Replay mode serves from the store only (ReplayMiss when absent);
  /// record mode calls the endpoint and stores the answer. Throws
  /// LLMUnavailable after the retry budget is spent.
  std::string complete(const CompletionRequest& request);

  Mode mode() const noexcept { return options_.mode; }
  std::size_t network_calls() const noexcept { return network_calls_; }

private:
  std::string call(const CompletionRequest& request);

  Options options_;
  std::unique_ptr<ReplayStore> store_;
  std::size_t network_calls_ = 0;
  std::mutex counter_mutex_;
};

/// Lines of the form `<ws>*<digits>(.|))<ws>+<payload>`; payload trimmed of
/// surrounding whitespace and quotes. Other lines are ignored.
std::vector<std::string> parse_numbered_list(std::string_view text);

}  // namespace aug::llm
