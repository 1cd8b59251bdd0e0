#include "condense/vectorize.hpp"

#include "condense/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace condense {

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::doc_freq(std::string_view term) const {
  const auto index = index_of(term);
  return index ? doc_freq_[*index] : 0;
}

double Vocabulary::idf(std::uint32_t term_index) const {
  const auto n = static_cast<double>(num_docs_);
  const auto df = static_cast<double>(doc_freq_.at(term_index));
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

Vocabulary fit_vocabulary(std::span<const std::vector<std::string>> tokenized) {
  Vocabulary vocab;
  vocab.num_docs_ = tokenized.size();
  std::vector<std::size_t> last_seen;  // segment number + 1 that last counted the term
  bool any_token = false;
  for (std::size_t segment = 0; segment < tokenized.size(); ++segment) {
    for (const std::string& term : tokenized[segment]) {
      any_token = true;
      auto [it, inserted] = vocab.index_.try_emplace(term, static_cast<std::uint32_t>(vocab.terms_.size()));
      if (inserted) {
        vocab.terms_.push_back(term);
        vocab.doc_freq_.push_back(0);
        last_seen.push_back(0);
      }
      if (last_seen[it->second] != segment + 1) {
        last_seen[it->second] = segment + 1;
        ++vocab.doc_freq_[it->second];
      }
    }
  }
  if (!any_token) throw EmptyCorpus();
  return vocab;
}

Vocabulary fit_vocabulary(std::span<const std::string> texts, const Tokenizer& tokenizer) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(texts.size());
  for (const std::string& text : texts) tokenized.push_back(tokenizer.tokenize(text));
  return fit_vocabulary(tokenized);
}

double DenseVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::size_t> counts;
  for (const std::string& term : tokens) {
    if (const auto index = vocab.index_of(term)) ++counts[*index];
  }
  SparseVector vec;
  vec.entries.reserve(counts.size());
  double sum = 0.0;
  for (const auto& [index, tf] : counts) {
    const double weight = static_cast<double>(tf) * vocab.idf(index);
    vec.entries.emplace_back(index, weight);
    sum += weight * weight;
  }
  if (vec.entries.empty()) return vec;
  const double norm = std::sqrt(sum);
  double normalized_sum = 0.0;
  for (auto& entry : vec.entries) {
    entry.second /= norm;
    normalized_sum += entry.second * entry.second;
  }
  vec.norm = std::sqrt(normalized_sum);
  return vec;
}

SparseVector tfidf_vector(std::string_view text, const Vocabulary& vocab, const Tokenizer& tokenizer) {
  const std::vector<std::string> tokens = tokenizer.tokenize(text);
  return tfidf_vector(tokens, vocab);
}

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int shift = 0; shift < 64; shift += 8) mix(static_cast<unsigned char>(seed >> shift));
  for (char c : bytes) mix(static_cast<unsigned char>(c));
  return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

DenseVector hashed_embed(std::string_view text, std::size_t dimension, std::uint64_t seed,
                         const Tokenizer& tokenizer) {
  if (dimension == 0) throw std::invalid_argument("hashed_embed: dimension must be positive");
  DenseVector vec;
  vec.values.assign(dimension, 0.0);
  for (const std::string& term : tokenizer.tokenize(text)) {
    const std::uint64_t h = stable_hash(term, seed);
    const double sign = (splitmix64(h) >> 63) != 0 ? -1.0 : 1.0;
    vec.values[h % dimension] += sign;
  }
  const double norm = vec.norm();
  if (norm > 0.0) {
    for (double& v : vec.values) v /= norm;
  }
  return vec;
}

}  // namespace condense
