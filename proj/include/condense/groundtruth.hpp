#pragma once

#include "condense/corpus.hpp"
#include "condense/retrieve.hpp"
#include "condense/segmenter.hpp"
#include "condense/vectorize.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace condense {

/// Human-verified answer location for one (question, document) pair.
struct GroundTruthAnnotation {
  std::string question_id;
  std::string doc_id;
  int label = 0;  // 1 when the document answers the question
  std::vector<Span> answer_spans;
  friend bool operator==(const GroundTruthAnnotation&, const GroundTruthAnnotation&) = default;
};

struct KeywordSet {
  std::string question_id;
  std::vector<std::pair<std::string, double>> keywords;  // weight descending

  std::size_t size() const noexcept { return keywords.size(); }
};

/// Top-m question terms by TF-IDF weight against `vocab`; ties keep question word order.
/// Throws NoKeywords when no question term is in the vocabulary.
KeywordSet extract_keywords(const Question& question, const Vocabulary& vocab, std::size_t m = 8,
                            const Tokenizer& tokenizer = Tokenizer::standard());

/// Fraction of keyword terms that occur in the tokenized segment.
double keyword_coverage(std::string_view segment_text, const KeywordSet& keywords,
                        const Tokenizer& tokenizer = Tokenizer::standard());

struct TopkHit {
  bool hit = false;
  std::optional<std::size_t> best_rank;  // 1-based
  friend bool operator==(const TopkHit&, const TopkHit&) = default;
};

/// Whether any annotated span shares a character with a ranked segment; best_rank is the first
/// such rank. `segments` are the document's segments (looked up by segment_index).
/// Throws AnnotationOutOfBounds when a span lies past `doc_length`.
TopkHit answer_in_topk(const RetrievalResult& result, const GroundTruthAnnotation& annotation,
                       std::span<const Segment> segments, std::size_t doc_length);

/// Segments and length of each document, keyed by doc_id.
struct SegmentIndex {
  struct Entry {
    std::vector<Segment> segments;
    std::size_t doc_length = 0;
  };
  std::map<std::string, Entry, std::less<>> documents;

  const Entry& at(const std::string& doc_id) const;
};

/// Fraction of label-1 pairs whose answer overlaps the retrieved segments.
/// Throws NoPositivePairs or MissingResult.
double recall_at_k(std::span<const RetrievalResult> results,
                   std::span<const GroundTruthAnnotation> annotations, const SegmentIndex& index);

/// Line-delimited {"question_id","doc_id","label","answer_spans":[{"start","end"}]}.
/// Throws ParseError naming the offending line.
std::vector<GroundTruthAnnotation> read_annotations(std::istream& in);
std::vector<GroundTruthAnnotation> load_annotations(const std::filesystem::path& path);
void write_annotations(std::span<const GroundTruthAnnotation> annotations, std::ostream& out);

/// Checks ids and span bounds against `corpus`. Throws DataError / AnnotationOutOfBounds.
void validate_annotations(std::span<const GroundTruthAnnotation> annotations, const Corpus& corpus);

}  // namespace condense
