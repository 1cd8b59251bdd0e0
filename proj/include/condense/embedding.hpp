#pragma once

#include "condense/vectorize.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace condense {

/// Source of dense text embeddings. embed_batch returns one vector per input, in order, each of
/// dimension(); identical inputs give identical vectors for the lifetime of the provider.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  /// 0 while a remote provider has not yet learned its dimension.
  virtual std::size_t dimension() const = 0;
  virtual std::vector<DenseVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// Offline provider backed by hashed_embed.
class HashedEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashedEmbeddingProvider(std::size_t dimension = 1024, std::uint64_t seed = 0,
                                   const Tokenizer& tokenizer = Tokenizer::standard());

  std::string name() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<DenseVector> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
  const Tokenizer* tokenizer_;
};

/// Content-addressed on-disk vector cache: one JSON file per (model, normalized text).
/// Writes go through a temporary file and an atomic rename, so concurrent readers never see a
/// partial entry.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path directory);

  /// Hex SHA-256 of the model name and the normalized text.
  static std::string key(std::string_view model, std::string_view text);

  std::optional<DenseVector> get(std::string_view model, std::string_view text) const;
  void put(std::string_view model, std::string_view text, const DenseVector& vector) const;
  const std::filesystem::path& directory() const noexcept { return directory_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path directory_;
};

struct RemoteEmbeddingConfig {
  /// Base URL; requests go to POST {endpoint}/embed.
  std::string endpoint;
  std::string model;
  /// Declared dimension. When unset, the first response fixes it.
  std::optional<std::size_t> dimension;
  /// Sent as "Authorization: Bearer ..." when non-empty.
  std::string api_key;
  std::optional<std::filesystem::path> cache_dir;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::size_t max_batch = 32;
  std::size_t max_concurrency = 4;
  std::size_t max_text_chars = 32768;
  std::chrono::seconds timeout{60};
  /// Backoff sleeper; replaceable so tests can observe the schedule.
  std::function<void(std::chrono::milliseconds)> sleep;

  /// Fills api_key from EMBED_API_KEY when it is empty.
  static RemoteEmbeddingConfig from_env(std::string endpoint, std::string model);
};

/// Client for the embedding service protocol:
///   POST {endpoint}/embed  {"model": str, "texts": [str]}  ->  {"dimension": int, "vectors": [[float]]}
/// Transport failures and 429/5xx answers are retried with exponential backoff; other non-2xx
/// answers raise ProviderError with an excerpt of the body.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

  std::string name() const override { return "remote:" + config_.model; }
  std::size_t dimension() const override { return dimension_.load(); }
  std::vector<DenseVector> embed_batch(std::span<const std::string> texts) override;

  /// HTTP requests issued so far, retries included.
  std::size_t requests_sent() const noexcept { return requests_.load(); }

 private:
  std::vector<DenseVector> request(std::span<const std::string> texts);
  void check_dimension(std::size_t actual);

  RemoteEmbeddingConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::optional<EmbeddingCache> cache_;
  std::atomic<std::size_t> dimension_{0};
  std::atomic<std::size_t> requests_{0};
  std::mutex memo_mutex_;
  std::unordered_map<std::string, DenseVector> memo_;
};

/// One-shot convenience wrapper around RemoteEmbeddingProvider.
std::vector<DenseVector> remote_embed_batch(std::span<const std::string> texts, std::string endpoint,
                                            std::string model);

}  // namespace condense
