#pragma once

#include "condense/corpus.hpp"
#include "condense/embedding.hpp"
#include "condense/segmenter.hpp"
#include "condense/vectorize.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace condense {

/// q.p / (|q| |p|), clamped to [-1, 1]. Throws ZeroVector when either norm is zero.
double cosine_similarity(const SparseVector& q, const SparseVector& p);
/// Throws DimensionMismatch for vectors of different dimension.
double cosine_similarity(const DenseVector& q, const DenseVector& p);

/// Pairwise score matrix: scores[i][j] is the cosine between query i and text j, or nullopt when
/// the pair is undefined because one side encodes to the zero vector.
using ScoreMatrix = std::vector<std::vector<std::optional<double>>>;

class ScoringEngine {
 public:
  virtual ~ScoringEngine() = default;
  /// "tfidf" or "dense:<provider>".
  virtual std::string name() const = 0;
  virtual ScoreMatrix score(std::span<const std::string> queries, std::span<const std::string> texts) = 0;
};

/// Sparse baseline over a vocabulary fitted on the segment collection.
class TfidfEngine final : public ScoringEngine {
 public:
  explicit TfidfEngine(Vocabulary vocab, const Tokenizer& tokenizer = Tokenizer::standard());

  std::string name() const override { return "tfidf"; }
  ScoreMatrix score(std::span<const std::string> queries, std::span<const std::string> texts) override;
  const Vocabulary& vocabulary() const noexcept { return vocab_; }

 private:
  Vocabulary vocab_;
  const Tokenizer* tokenizer_;
};

class DenseEngine final : public ScoringEngine {
 public:
  explicit DenseEngine(EmbeddingProvider& provider) : provider_(&provider) {}

  std::string name() const override { return "dense:" + provider_->name(); }
  ScoreMatrix score(std::span<const std::string> queries, std::span<const std::string> texts) override;

 private:
  EmbeddingProvider* provider_;
};

struct RetrievalConfig {
  std::size_t k = 5;
  /// Append the question's explanation to the query text.
  bool query_with_explanation = true;

  void validate() const;
};

struct RankedSegment {
  std::size_t segment_index = 0;
  double score = 0.0;
  friend bool operator==(const RankedSegment&, const RankedSegment&) = default;
};

struct RetrievalResult {
  std::string question_id;
  std::string doc_id;
  std::string engine;
  std::vector<RankedSegment> ranked;  // score descending, then segment_index ascending
  std::size_t k_used = 0;
  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Texts of `segments` sliced from `doc`, UTF-8.
std::vector<std::string> segment_texts(const Document& doc, std::span<const Segment> segments);

/// Top-k selection from precomputed scores (scores[i] belongs to segments[i]).
/// Throws NoScorableSegments when every score is undefined.
RetrievalResult rank_scores(const std::string& question_id, const std::string& doc_id,
                            const std::string& engine, std::span<const std::optional<double>> scores,
                            std::span<const Segment> segments, std::size_t k);

RetrievalResult rank_segments(const Question& question, const Document& doc,
                              std::span<const Segment> segments, const RetrievalConfig& config,
                              ScoringEngine& engine);

/// Arithmetic mean of the ranked scores. Throws std::invalid_argument on an empty ranking.
double mean_topk_score(const RetrievalResult& result);

/// The first min(k, size) entries of `result`, with k_used = k.
RetrievalResult truncate(const RetrievalResult& result, std::size_t k);

struct KSweep {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> per_k;  // ascending k, duplicates removed
};

/// Mean top-k score for each candidate over one full ranking; ties favour the smaller k.
KSweep sweep_k(const RetrievalResult& full_ranking, std::span<const std::size_t> candidates);
KSweep sweep_k(const Question& question, const Document& doc, std::span<const Segment> segments,
               ScoringEngine& engine, std::span<const std::size_t> candidates,
               bool query_with_explanation = true);

/// One JSON object per line; scores written with 6 decimals.
void write_results(std::span<const RetrievalResult> results, std::ostream& out);
std::vector<RetrievalResult> read_results(std::istream& in);

}  // namespace condense
