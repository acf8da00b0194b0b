#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "augimodels/http.hpp"
#include "augimodels/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(AUG_FIXTURE_DIR); }

class TempDir {
public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto tag = aug::splitmix64(static_cast<std::uint64_t>(::getpid()) * 7919 + counter++);
    path_ = fs::temp_directory_path() / ("augtest-" + std::to_string(tag));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Relative path -> bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

/// Transport answering from a callback; counts calls.
class ScriptedTransport : public aug::net::Transport {
public:
  using Handler = std::function<aug::net::HttpResponse(const std::string& route, const std::string& body)>;
  explicit ScriptedTransport(Handler h) : handler_(std::move(h)) {}

  aug::net::HttpResponse post(const std::string&, const std::string& route, const std::string& body,
                              const aug::net::Headers& headers) override {
    ++calls;
    last_headers = headers;
    return handler_(route, body);
  }

  std::atomic<int> calls{0};
  aug::net::Headers last_headers;

private:
  Handler handler_;
};

/// Transport that fails the test if it is ever used.
class ForbiddenTransport : public aug::net::Transport {
public:
  aug::net::HttpResponse post(const std::string&, const std::string&, const std::string&,
                              const aug::net::Headers&) override {
    ++calls;
    throw std::logic_error("network access in a test that forbids it");
  }
  std::atomic<int> calls{0};
};

}  // namespace testutil
