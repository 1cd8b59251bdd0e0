#pragma once

#include "condense/tokenizer.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace condense {

/// Term statistics of the fitting collection (one entry per segment).
class Vocabulary {
 public:
  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t num_docs() const noexcept { return num_docs_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<std::size_t>& doc_freq() const noexcept { return doc_freq_; }
  std::optional<std::uint32_t> index_of(std::string_view term) const;
  std::size_t doc_freq(std::string_view term) const;

  /// ln((1 + N) / (1 + df)) + 1
  double idf(std::uint32_t term_index) const;

  friend Vocabulary fit_vocabulary(std::span<const std::vector<std::string>> tokenized);

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> doc_freq_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t num_docs_ = 0;
};

/// Counts segments (not occurrences) per term; terms ordered by first occurrence.
/// Throws EmptyCorpus when no segment has a token.
Vocabulary fit_vocabulary(std::span<const std::vector<std::string>> tokenized);
Vocabulary fit_vocabulary(std::span<const std::string> texts,
                          const Tokenizer& tokenizer = Tokenizer::standard());

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly increasing index
  double norm = 0.0;

  bool empty() const noexcept { return entries.empty(); }
};

struct DenseVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  double norm() const;
};

/// tf * idf over in-vocabulary terms, L2-normalized. Out-of-vocabulary terms are dropped; an
/// all-OOV input gives the empty vector with norm 0.
SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab);
SparseVector tfidf_vector(std::string_view text, const Vocabulary& vocab,
                          const Tokenizer& tokenizer = Tokenizer::standard());

/// Signed feature hashing of the tokenizer's terms into `dimension` buckets, L2-normalized.
DenseVector hashed_embed(std::string_view text, std::size_t dimension, std::uint64_t seed,
                         const Tokenizer& tokenizer = Tokenizer::standard());

/// Stable 64-bit FNV-1a over the seed bytes followed by `bytes`.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed);

}  // namespace condense
