#include "augimodels/llmclient.hpp"

#include <openssl/sha.h>

#include <json.hpp>

#include "augimodels/errors.hpp"
#include "binio.hpp"

namespace aug::llm {

void CompletionRequest::validate() const {
  if (prompt.empty()) throw InvalidArgument("completion prompt must be non-empty");
  if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
  if (!(temperature >= 0)) throw InvalidArgument("temperature must be >= 0");
}

std::string CompletionRequest::canonical_json() const {
  // nlohmann::json objects iterate keys in sorted order, so the field
  // order is fixed: max_tokens, prompt, temperature.
  nlohmann::json j;
  j["prompt"] = prompt;
  j["max_tokens"] = max_tokens;
  j["temperature"] = temperature;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string CompletionRequest::key() const {
  const auto canonical = canonical_json();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

ReplayStore::ReplayStore(std::filesystem::path directory) : dir_(std::move(directory)) {}

std::optional<std::string> ReplayStore::find(const CompletionRequest& request) const {
  const auto path = dir_ / (request.key() + ".txt");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  return binio::read_file(path);
}

void ReplayStore::put(const CompletionRequest& request, std::string_view completion) {
  std::lock_guard lock(write_mutex_);
  std::filesystem::create_directories(dir_);
  const auto key = request.key();
  binio::write_file_atomic(dir_ / (key + ".req.json"), request.canonical_json());
  binio::write_file_atomic(dir_ / (key + ".txt"), completion);
}

Mode parse_mode(std::string_view name) {
  if (name == "live") return Mode::Live;
  if (name == "record") return Mode::Record;
  if (name == "replay") return Mode::Replay;
  throw InvalidArgument("unknown LLM mode: " + std::string(name));
}

Client::Client(Options options) : options_(std::move(options)) {
  if (options_.mode != Mode::Live) {
    if (!options_.replay_dir) throw InvalidArgument("record/replay modes need a replay directory");
    store_ = std::make_unique<ReplayStore>(*options_.replay_dir);
  }
  if (options_.mode != Mode::Replay) {
    if (options_.endpoint.empty()) throw InvalidArgument("live/record modes need an endpoint");
    if (!options_.transport) options_.transport = net::make_http_transport();
  }
}

std::string Client::call(const CompletionRequest& request) {
  net::Headers headers;
  if (!options_.bearer_token.empty())
    headers.emplace_back("Authorization", "Bearer " + options_.bearer_token);
  {
    std::lock_guard lock(counter_mutex_);
    ++network_calls_;
  }
  auto outcome = net::post_with_retries(*options_.transport, options_.endpoint, "/complete",
                                        request.canonical_json(), headers, options_.retry);
  if (!outcome.ok) throw LLMUnavailable(options_.endpoint + ": " + outcome.error);
  try {
    const auto j = nlohmann::json::parse(outcome.body);
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw LLMUnavailable(std::string("unparseable completion response: ") + e.what());
  }
}

std::string Client::complete(const CompletionRequest& request) {
  request.validate();
  switch (options_.mode) {
    case Mode::Live:
      return call(request);
    case Mode::Record: {
      auto text = call(request);
      store_->put(request, text);
      return text;
    }
    case Mode::Replay: {
      auto hit = store_->find(request);
      if (!hit) throw ReplayMiss(request.key());
      return *hit;
    }
  }
  throw InvalidArgument("unknown mode");
}

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim_payload(std::string_view s) {
  static constexpr std::string_view kQuotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                 "\xE2\x80\x98", "\xE2\x80\x99"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    while (!s.empty() && is_ws(s.front())) s.remove_prefix(1), changed = true;
    while (!s.empty() && is_ws(s.back())) s.remove_suffix(1), changed = true;
    for (auto q : kQuotes) {
      if (s.starts_with(q)) s.remove_prefix(q.size()), changed = true;
      if (s.ends_with(q)) s.remove_suffix(q.size()), changed = true;
    }
  }
  return s;
}

}  // namespace

std::vector<std::string> parse_numbered_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    std::size_t i = 0;
    while (i < line.size() && is_ws(line[i])) ++i;
    const std::size_t digits = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    const bool numbered = i > digits && i < line.size() && (line[i] == '.' || line[i] == ')');
    if (numbered) {
      ++i;
      const std::size_t ws = i;
      while (i < line.size() && is_ws(line[i])) ++i;
      if (i > ws) {
        const auto payload = trim_payload(line.substr(i));
        if (!payload.empty()) out.emplace_back(payload);
      }
    }
    if (nl == text.size()) break;
  }
  return out;
}

}  // namespace aug::llm
