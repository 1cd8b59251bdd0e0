#include "condense/embedding.hpp"

#include "condense/corpus.hpp"
#include "condense/digest.hpp"
#include "condense/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

namespace condense {

using nlohmann::json;

HashedEmbeddingProvider::HashedEmbeddingProvider(std::size_t dimension, std::uint64_t seed,
                                                 const Tokenizer& tokenizer)
    : dimension_(dimension), seed_(seed), tokenizer_(&tokenizer) {
  if (dimension_ == 0) throw ConfigError("hashed embedding dimension must be positive");
}

std::string HashedEmbeddingProvider::name() const {
  return "hashed:" + std::to_string(dimension_) + ":" + std::to_string(seed_);
}

std::vector<DenseVector> HashedEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) out.push_back(hashed_embed(text, dimension_, seed_, *tokenizer_));
  return out;
}

namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::string EmbeddingCache::key(std::string_view model, std::string_view text) {
  std::string material(model);
  material.push_back('\0');
  material += normalize_text(text);
  return sha256_hex(material);
}

std::filesystem::path EmbeddingCache::path_for(const std::string& key) const {
  return directory_ / key.substr(0, 2) / (key + ".json");
}

std::optional<DenseVector> EmbeddingCache::get(std::string_view model, std::string_view text) const {
  std::ifstream in(path_for(key(model, text)), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const json entry = json::parse(in);
    DenseVector vec;
    vec.values = entry.at("vector").get<std::vector<double>>();
    if (vec.values.empty()) return std::nullopt;
    return vec;
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entries are refetched and overwritten
  }
}

void EmbeddingCache::put(std::string_view model, std::string_view text, const DenseVector& vector) const {
  const std::string k = key(model, text);
  const std::filesystem::path target = path_for(k);
  std::filesystem::create_directories(target.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << "." << std::random_device{}();
  const std::filesystem::path temp = target.string() + suffix.str();
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    const json entry = {{"model", model}, {"dimension", vector.dimension()}, {"vector", vector.values}};
    out << entry.dump();
    if (!out) throw std::runtime_error("cannot write embedding cache entry " + temp.string());
  }
  std::filesystem::rename(temp, target);
}

RemoteEmbeddingConfig RemoteEmbeddingConfig::from_env(std::string endpoint, std::string model) {
  RemoteEmbeddingConfig config;
  config.endpoint = std::move(endpoint);
  config.model = std::move(model);
  if (const char* key = std::getenv("EMBED_API_KEY"); key != nullptr) config.api_key = key;
  return config;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ConfigError("embedding endpoint is required");
  if (config_.model.empty()) throw ConfigError("embedding model is required");
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (config_.max_batch == 0 || config_.max_concurrency == 0) {
    throw ConfigError("max_batch and max_concurrency must be positive");
  }
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("embedding endpoint must be an http(s) URL: '" + config_.endpoint + "'");
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : config_.endpoint.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/embed";
  if (config_.dimension) dimension_ = *config_.dimension;
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
  if (!config_.sleep) {
    config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

void RemoteEmbeddingProvider::check_dimension(std::size_t actual) {
  std::size_t expected = 0;
  if (dimension_.compare_exchange_strong(expected, actual)) return;
  if (expected != actual) throw DimensionMismatch(expected, actual);
}

std::vector<DenseVector> RemoteEmbeddingProvider::request(std::span<const std::string> texts) {
  const json body = {{"model", config_.model}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string payload = body.dump();

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) config_.sleep(config_.initial_backoff * (1 << (attempt - 2)));

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    ++requests_;
    const httplib::Result result = client.Post(path_, headers, payload, "application/json");

    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status) + ": " + excerpt(result->body);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw ProviderError("embedding service returned HTTP " + std::to_string(status) + ": " +
                          excerpt(result->body));
    }

    json reply;
    try {
      reply = json::parse(result->body);
    } catch (const json::parse_error&) {
      throw ProviderError("embedding service returned invalid JSON: " + excerpt(result->body));
    }
    if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array() ||
        !reply.contains("dimension") || !reply["dimension"].is_number_unsigned()) {
      throw ProviderError("embedding response lacks 'dimension' or 'vectors': " + excerpt(result->body));
    }
    const auto& vectors = reply["vectors"];
    if (vectors.size() != texts.size()) {
      throw ProviderError("embedding service returned " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(texts.size()) + " texts");
    }
    const auto declared = reply["dimension"].get<std::size_t>();
    check_dimension(declared);
    std::vector<DenseVector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
      if (!v.is_array()) throw ProviderError("embedding vector is not an array");
      DenseVector vec;
      try {
        vec.values = v.get<std::vector<double>>();
      } catch (const json::exception&) {
        throw ProviderError("embedding vector holds non-numeric values");
      }
      if (vec.dimension() != declared) throw DimensionMismatch(declared, vec.dimension());
      for (double x : vec.values) {
        if (!std::isfinite(x)) throw ProviderError("embedding vector holds a non-finite value");
      }
      out.push_back(std::move(vec));
    }
    return out;
  }
  throw TransportError("embedding request failed after " + std::to_string(config_.max_attempts) +
                       " attempts; last failure: " + last_failure);
}

std::vector<DenseVector> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
  for (const std::string& text : texts) {
    if (text.size() > config_.max_text_chars) {
      throw ProviderError("text of " + std::to_string(text.size()) + " bytes exceeds the provider limit of " +
                          std::to_string(config_.max_text_chars));
    }
  }

  std::vector<std::optional<DenseVector>> found(texts.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::size_t> missing_slot;
  {
    std::lock_guard lock(memo_mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const std::string k = EmbeddingCache::key(config_.model, texts[i]);
      if (const auto it = memo_.find(k); it != memo_.end()) {
        found[i] = it->second;
      } else if (cache_) {
        if (auto hit = cache_->get(config_.model, texts[i])) {
          check_dimension(hit->dimension());
          memo_.emplace(k, *hit);
          found[i] = std::move(hit);
        }
      }
      if (!found[i] && missing_slot.try_emplace(k, missing.size()).second) missing.push_back(texts[i]);
    }
  }

  std::vector<DenseVector> fetched(missing.size());
  std::vector<std::span<const std::string>> batches;
  for (std::size_t start = 0; start < missing.size(); start += config_.max_batch) {
    batches.emplace_back(missing.data() + start, std::min(config_.max_batch, missing.size() - start));
  }
  for (std::size_t wave = 0; wave < batches.size(); wave += config_.max_concurrency) {
    std::vector<std::future<std::vector<DenseVector>>> running;
    const std::size_t wave_end = std::min(batches.size(), wave + config_.max_concurrency);
    for (std::size_t b = wave; b < wave_end; ++b) {
      running.push_back(std::async(std::launch::async, [this, batch = batches[b]] { return request(batch); }));
    }
    for (std::size_t b = wave; b < wave_end; ++b) {
      std::vector<DenseVector> vectors = running[b - wave].get();
      const std::size_t offset = static_cast<std::size_t>(batches[b].data() - missing.data());
      for (std::size_t j = 0; j < vectors.size(); ++j) fetched[offset + j] = std::move(vectors[j]);
    }
  }

  {
    std::lock_guard lock(memo_mutex_);
    for (std::size_t j = 0; j < missing.size(); ++j) {
      if (cache_) cache_->put(config_.model, missing[j], fetched[j]);
      memo_.emplace(EmbeddingCache::key(config_.model, missing[j]), fetched[j]);
    }
  }

  std::vector<DenseVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (found[i]) {
      out.push_back(std::move(*found[i]));
    } else {
      out.push_back(fetched[missing_slot.at(EmbeddingCache::key(config_.model, texts[i]))]);
    }
  }
  return out;
}

std::vector<DenseVector> remote_embed_batch(std::span<const std::string> texts, std::string endpoint,
                                            std::string model) {
  RemoteEmbeddingProvider provider(RemoteEmbeddingConfig::from_env(std::move(endpoint), std::move(model)));
  return provider.embed_batch(texts);
}

}  // namespace condense
