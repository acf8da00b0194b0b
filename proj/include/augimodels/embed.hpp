#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augimodels/http.hpp"
#include "augimodels/kernels.hpp"
#include "augimodels/textproc.hpp"

namespace aug::embed {

/// Fixed-length finite vector. Held in double precision in memory; the wire
/// and cache formats carry 32-bit floats.
using EmbeddingVector = std::vector<double>;

/// Entries of the binary cache file, keyed by canonical ngram.
using CacheEntries = std::map<std::string, std::vector<float>>;

class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;
  /// Identifies the provider inside persisted models.
  virtual std::string fingerprint() const = 0;
  /// One vector per input, same order. Must be safe to call concurrently.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> ngrams) = 0;

  EmbeddingVector embed(std::string_view ngram);
  EmbeddingVector embed(const text::Ngram& ngram) { return embed(ngram.text()); }
};

/// Deterministic provider for tests: a seeded counter-based hash of the
/// canonical string, expanded to `dim` values in [-1, 1) and L2-normalized.
class StubProvider final : public EmbeddingProvider {
public:
  explicit StubProvider(std::size_t dim, std::uint64_t seed = 0);

  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> ngrams) override;
  EmbeddingVector vector_for(std::string_view ngram) const;

private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Read-only lookup into a cache file (or an in-memory table). Absent
/// ngrams raise CacheMiss.
class CacheProvider final : public EmbeddingProvider {
public:
  explicit CacheProvider(const std::filesystem::path& path);
  CacheProvider(CacheEntries entries, std::size_t dim, std::string name);

  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> ngrams) override;
  const CacheEntries& entries() const noexcept { return entries_; }

private:
  CacheEntries entries_;
  std::size_t dim_ = 0;
  std::string name_;
};

/// Explicit vectors for some ngrams, everything else from `base`.
class OverlayProvider final : public EmbeddingProvider {
public:
  OverlayProvider(std::shared_ptr<EmbeddingProvider> base,
                  std::map<std::string, EmbeddingVector> overrides);

  std::size_t dim() const override { return base_->dim(); }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> ngrams) override;

private:
  std::shared_ptr<EmbeddingProvider> base_;
  std::map<std::string, EmbeddingVector> overrides_;
};

/// HTTP embedder (POST <endpoint>/embed). Results are memoized on first use
/// so repeated calls are bit-identical; save_cache() persists the memo in
/// the binary cache format.
class RemoteProvider final : public EmbeddingProvider {
public:
  static constexpr std::size_t kBatchSize = 256;

  RemoteProvider(std::string endpoint, std::size_t dim,
                 std::shared_ptr<net::Transport> transport = nullptr,
                 net::RetryPolicy retry = {}, std::filesystem::path cache_path = {});

  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> ngrams) override;

  /// Writes every memoized vector to the configured cache path; returns the
  /// record count (0 and no file when no path is configured).
  std::size_t save_cache() const;
  std::size_t requests_sent() const;

private:
  void fetch(std::span<const std::string> missing);

  std::string endpoint_;
  std::size_t dim_;
  std::shared_ptr<net::Transport> transport_;
  net::RetryPolicy retry_;
  std::filesystem::path cache_path_;
  net::Headers headers_;

  mutable std::shared_mutex mutex_;
  CacheEntries memo_;
  std::size_t requests_ = 0;
};

enum class ProviderKind { Remote, CacheBacked, Stub };

struct EmbeddingProviderSpec {
  ProviderKind kind = ProviderKind::Stub;
  std::string endpoint;
  std::filesystem::path cache_path;
  std::size_t dim = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::shared_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec);

/// Elementwise sum over `ngrams` with multiplicity, accumulated in canonical
/// (bytewise) ngram order; the zero vector for an empty input.
EmbeddingVector sum_embeddings(std::span<const std::string> ngrams, EmbeddingProvider& provider);
EmbeddingVector sum_embeddings(std::span<const text::Ngram> ngrams, EmbeddingProvider& provider);

/// Embeds each ngram once into the rows of a matrix (row i = ngrams[i]).
RowMatrix embed_matrix(std::span<const std::string> ngrams, EmbeddingProvider& provider);

/// Replaces `path` atomically with the binary cache file. All vectors must
/// share one dimension; `dim` is used for an empty map.
std::size_t write_cache(const CacheEntries& entries, const std::filesystem::path& path,
                        std::size_t dim = 0);
CacheEntries read_cache(const std::filesystem::path& path, std::size_t* dim = nullptr);

/// Byte size of a cache file with these entries.
std::size_t cache_file_size(const CacheEntries& entries, std::size_t dim);

}  // namespace aug::embed
