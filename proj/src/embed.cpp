#include "augimodels/embed.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <json.hpp>

#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "binio.hpp"

namespace aug::embed {

namespace {
constexpr std::string_view kCacheMagic = "AUGE";

EmbeddingVector widen(const std::vector<float>& v) { return EmbeddingVector(v.begin(), v.end()); }
}  // namespace

EmbeddingVector EmbeddingProvider::embed(std::string_view ngram) {
  const std::string key(ngram);
  auto out = embed_batch(std::span<const std::string>(&key, 1));
  return std::move(out.front());
}

// --- stub ------------------------------------------------------------------

StubProvider::StubProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw InvalidArgument("stub embedding dimension must be positive");
}

std::string StubProvider::fingerprint() const {
  return "stub:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

EmbeddingVector StubProvider::vector_for(std::string_view ngram) const {
  const std::uint64_t key = splitmix64(fnv1a64(ngram) ^ splitmix64(seed_));
  EmbeddingVector v(dim_);
  double norm_sq = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const std::uint64_t bits = splitmix64(key + i);
    v[i] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    norm_sq += v[i] * v[i];
  }
  const double norm = std::sqrt(norm_sq);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<EmbeddingVector> StubProvider::embed_batch(std::span<const std::string> ngrams) {
  std::vector<EmbeddingVector> out;
  out.reserve(ngrams.size());
  for (const auto& g : ngrams) out.push_back(vector_for(g));
  return out;
}

// --- cache -----------------------------------------------------------------

CacheProvider::CacheProvider(const std::filesystem::path& path)
    : name_(path.filename().string()) {
  entries_ = read_cache(path, &dim_);
}

CacheProvider::CacheProvider(CacheEntries entries, std::size_t dim, std::string name)
    : entries_(std::move(entries)), dim_(dim), name_(std::move(name)) {
  for (const auto& [k, v] : entries_)
    if (v.size() != dim_) throw DimensionMismatch("cache entry '" + k + "' has wrong length");
}

std::string CacheProvider::fingerprint() const {
  return "cache:" + name_ + ":dim=" + std::to_string(dim_);
}

std::vector<EmbeddingVector> CacheProvider::embed_batch(std::span<const std::string> ngrams) {
  std::vector<EmbeddingVector> out;
  out.reserve(ngrams.size());
  for (const auto& g : ngrams) {
    auto it = entries_.find(g);
    if (it == entries_.end()) throw CacheMiss("ngram '" + g + "' is not in the cache");
    out.push_back(widen(it->second));
  }
  return out;
}

// --- overlay ---------------------------------------------------------------

OverlayProvider::OverlayProvider(std::shared_ptr<EmbeddingProvider> base,
                                 std::map<std::string, EmbeddingVector> overrides)
    : base_(std::move(base)), overrides_(std::move(overrides)) {
  for (const auto& [k, v] : overrides_)
    if (v.size() != base_->dim()) throw DimensionMismatch("override '" + k + "' has wrong length");
}

std::string OverlayProvider::fingerprint() const {
  std::uint64_t h = fnv1a64(base_->fingerprint());
  for (const auto& [k, v] : overrides_) {
    h = splitmix64(h ^ fnv1a64(k));
    for (double x : v) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x));
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return base_->fingerprint() + ":overlay=" + hex;
}

std::vector<EmbeddingVector> OverlayProvider::embed_batch(std::span<const std::string> ngrams) {
  std::vector<EmbeddingVector> out(ngrams.size());
  std::vector<std::string> rest;
  std::vector<std::size_t> rest_pos;
  for (std::size_t i = 0; i < ngrams.size(); ++i) {
    auto it = overrides_.find(ngrams[i]);
    if (it != overrides_.end()) {
      out[i] = it->second;
    } else {
      rest.push_back(ngrams[i]);
      rest_pos.push_back(i);
    }
  }
  if (!rest.empty()) {
    auto fetched = base_->embed_batch(rest);
    for (std::size_t j = 0; j < rest.size(); ++j) out[rest_pos[j]] = std::move(fetched[j]);
  }
  return out;
}

// --- remote ----------------------------------------------------------------

RemoteProvider::RemoteProvider(std::string endpoint, std::size_t dim,
                               std::shared_ptr<net::Transport> transport, net::RetryPolicy retry,
                               std::filesystem::path cache_path)
    : endpoint_(std::move(endpoint)),
      dim_(dim),
      transport_(transport ? std::move(transport) : net::make_http_transport()),
      retry_(retry),
      cache_path_(std::move(cache_path)) {
  if (endpoint_.empty()) throw InvalidArgument("remote embedding provider requires an endpoint");
  if (dim_ == 0) throw InvalidArgument("remote embedding provider requires a positive dim");
  if (!cache_path_.empty() && std::filesystem::exists(cache_path_)) {
    std::size_t file_dim = 0;
    memo_ = read_cache(cache_path_, &file_dim);
    if (!memo_.empty() && file_dim != dim_)
      throw DimensionMismatch("cache " + cache_path_.string() + " has dim " +
                              std::to_string(file_dim));
  }
}

std::string RemoteProvider::fingerprint() const {
  return "remote:" + endpoint_ + ":dim=" + std::to_string(dim_);
}

std::size_t RemoteProvider::requests_sent() const {
  std::shared_lock lock(mutex_);
  return requests_;
}

void RemoteProvider::fetch(std::span<const std::string> missing) {
  for (std::size_t start = 0; start < missing.size(); start += kBatchSize) {
    const auto batch = missing.subspan(start, std::min(kBatchSize, missing.size() - start));
    nlohmann::json request = {{"texts", std::vector<std::string>(batch.begin(), batch.end())}};
    auto outcome = net::post_with_retries(*transport_, endpoint_, "/embed", request.dump(),
                                          headers_, retry_);
    {
      std::unique_lock lock(mutex_);
      ++requests_;
    }
    if (!outcome.ok) throw ProviderUnavailable(endpoint_ + ": " + outcome.error);

    nlohmann::json response;
    try {
      response = nlohmann::json::parse(outcome.body);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderUnavailable("unparseable embedding response: " + std::string(e.what()));
    }
    if (!response.contains("embeddings") || !response["embeddings"].is_array() ||
        response["embeddings"].size() != batch.size())
      throw ProviderUnavailable("embedding response has the wrong shape");

    std::vector<std::vector<float>> vectors;
    vectors.reserve(batch.size());
    for (const auto& row : response["embeddings"]) {
      if (!row.is_array() || row.size() != dim_)
        throw DimensionMismatch("expected " + std::to_string(dim_) + " values, got " +
                                std::to_string(row.is_array() ? row.size() : 0));
      std::vector<float> v;
      v.reserve(dim_);
      for (const auto& x : row) {
        if (!x.is_number()) throw ProviderUnavailable("non-numeric embedding value");
        const auto f = static_cast<float>(x.get<double>());
        if (!std::isfinite(f)) throw ProviderUnavailable("non-finite embedding value");
        v.push_back(f);
      }
      vectors.push_back(std::move(v));
    }
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < batch.size(); ++i) memo_.emplace(batch[i], std::move(vectors[i]));
  }
}

std::vector<EmbeddingVector> RemoteProvider::embed_batch(std::span<const std::string> ngrams) {
  std::vector<std::string> missing;
  {
    std::shared_lock lock(mutex_);
    for (const auto& g : ngrams)
      if (!memo_.contains(g)) missing.push_back(g);
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  if (!missing.empty()) fetch(missing);

  std::vector<EmbeddingVector> out;
  out.reserve(ngrams.size());
  std::shared_lock lock(mutex_);
  for (const auto& g : ngrams) out.push_back(widen(memo_.at(g)));
  return out;
}

std::size_t RemoteProvider::save_cache() const {
  if (cache_path_.empty()) return 0;
  std::shared_lock lock(mutex_);
  return write_cache(memo_, cache_path_, dim_);
}

// --- factory ---------------------------------------------------------------

void EmbeddingProviderSpec::validate() const {
  switch (kind) {
    case ProviderKind::Remote:
      if (endpoint.empty()) throw InvalidArgument("remote provider requires an endpoint");
      if (dim == 0) throw InvalidArgument("remote provider requires dim");
      break;
    case ProviderKind::CacheBacked:
      if (cache_path.empty()) throw InvalidArgument("cache-backed provider requires a cache path");
      break;
    case ProviderKind::Stub:
      if (dim == 0) throw InvalidArgument("stub provider requires dim");
      break;
  }
}

std::shared_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ProviderKind::Remote:
      return std::make_shared<RemoteProvider>(spec.endpoint, spec.dim, nullptr, net::RetryPolicy{},
                                              spec.cache_path);
    case ProviderKind::CacheBacked: {
      auto p = std::make_shared<CacheProvider>(spec.cache_path);
      if (spec.dim != 0 && p->dim() != spec.dim)
        throw DimensionMismatch("cache dim " + std::to_string(p->dim()) + " != " +
                                std::to_string(spec.dim));
      return p;
    }
    case ProviderKind::Stub:
      return std::make_shared<StubProvider>(spec.dim, spec.seed);
  }
  throw InvalidArgument("unknown provider kind");
}

// --- helpers ---------------------------------------------------------------

EmbeddingVector sum_embeddings(std::span<const std::string> ngrams, EmbeddingProvider& provider) {
  EmbeddingVector total(provider.dim(), 0.0);
  if (ngrams.empty()) return total;
  std::vector<std::string> sorted(ngrams.begin(), ngrams.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> unique = sorted;
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const auto vectors = provider.embed_batch(unique);
  std::size_t u = 0;
  for (const auto& g : sorted) {
    while (unique[u] != g) ++u;
    const auto& v = vectors[u];
    if (v.size() != total.size()) throw DimensionMismatch("provider returned a wrong-length vector");
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += v[j];
  }
  return total;
}

EmbeddingVector sum_embeddings(std::span<const text::Ngram> ngrams, EmbeddingProvider& provider) {
  std::vector<std::string> keys;
  keys.reserve(ngrams.size());
  for (const auto& g : ngrams) keys.push_back(g.text());
  return sum_embeddings(keys, provider);
}

RowMatrix embed_matrix(std::span<const std::string> ngrams, EmbeddingProvider& provider) {
  const auto dim = static_cast<Eigen::Index>(provider.dim());
  RowMatrix out(static_cast<Eigen::Index>(ngrams.size()), dim);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < ngrams.size(); start += kChunk) {
    const auto chunk = ngrams.subspan(start, std::min(kChunk, ngrams.size() - start));
    const auto vectors = provider.embed_batch(chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (vectors[i].size() != provider.dim())
        throw DimensionMismatch("provider returned a wrong-length vector");
      out.row(static_cast<Eigen::Index>(start + i)) =
          Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(), dim);
    }
  }
  return out;
}

std::size_t cache_file_size(const CacheEntries& entries, std::size_t dim) {
  std::size_t size = kCacheMagic.size() + 8;
  for (const auto& [k, v] : entries) size += 4 + k.size() + 4 * dim;
  return size;
}

std::size_t write_cache(const CacheEntries& entries, const std::filesystem::path& path,
                        std::size_t dim) {
  if (!entries.empty()) dim = entries.begin()->second.size();
  std::string out;
  out.reserve(cache_file_size(entries, dim));
  out.append(kCacheMagic);
  binio::put_u32(out, static_cast<std::uint32_t>(dim));
  binio::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [key, values] : entries) {
    if (values.size() != dim) throw DimensionMismatch("cache entry '" + key + "' has wrong length");
    binio::put_bytes(out, key);
    for (float f : values) binio::put_f32(out, f);
  }
  binio::write_file_atomic(path, out);
  return entries.size();
}

CacheEntries read_cache(const std::filesystem::path& path, std::size_t* dim_out) {
  const auto data = binio::read_file(path);
  binio::Reader r(data, "embedding cache " + path.string());
  if (r.raw(4) != kCacheMagic) throw FormatError(path.string() + " is not an embedding cache");
  const auto dim = r.u32();
  const auto count = r.u32();
  CacheEntries entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto key = r.bytes();
    std::vector<float> v(dim);
    for (auto& f : v) f = r.f32();
    entries.emplace_hint(entries.end(), std::move(key), std::move(v));
  }
  if (!r.done()) throw FormatError(path.string() + ": trailing bytes");
  if (dim_out) *dim_out = dim;
  return entries;
}

}  // namespace aug::embed
