#pragma once

#include "condense/evaluate.hpp"
#include "condense/groundtruth.hpp"
#include "condense/retrieve.hpp"
#include "condense/sentences.hpp"
#include "condense/tokenizer.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace condense {

/// Marker between the question and its context; counted as one token.
inline constexpr std::string_view kQuestionSeparator = " [SEP] ";
/// Marker between consecutive context segments; counted as one token.
inline constexpr std::string_view kSegmentSeparator = " ||| ";
/// Smallest budget that can hold a question and a truncated first segment.
inline constexpr std::size_t kMinTokenBudget = 16;

struct ExportOptions {
  std::size_t token_budget = 600;
  bool question_with_explanation = true;
};

/// Condensed classification input for one (question, document) pair.
struct ClassificationRecord {
  std::string question_id;
  std::string doc_id;
  std::string question_text;
  std::string context;
  std::size_t token_count = 0;
  std::optional<int> label;
  /// Segment indices included, in rank order; the last may be truncated.
  std::vector<std::size_t> segment_indices;
  bool truncated = false;

  /// question_text + kQuestionSeparator + context
  std::string text() const;
};

/// Greedy rank-order packing of one result under the budget. The rank-1 segment is always kept,
/// cut back to a sentence boundary (or, failing that, a token boundary) when it is too long.
/// Throws BudgetTooSmall when the budget is under kMinTokenBudget or the question alone fills it.
ClassificationRecord condense_pair(const Question& question, const SegmentedDocument& document,
                                   const RetrievalResult& result, std::optional<int> label,
                                   const ExportOptions& options,
                                   const Tokenizer& tokenizer = Tokenizer::standard(),
                                   const SentenceSplitter& splitter = SentenceSplitter::standard());

/// One record per (question, document) pair, questions outermost. Throws MissingResult when a
/// pair has no retrieval result.
std::vector<ClassificationRecord> export_dataset(std::span<const Question> questions,
                                                 std::span<const SegmentedDocument> documents,
                                                 std::span<const RetrievalResult> results,
                                                 std::span<const GroundTruthAnnotation> annotations,
                                                 const ExportOptions& options,
                                                 const Tokenizer& tokenizer = Tokenizer::standard(),
                                                 const SentenceSplitter& splitter = SentenceSplitter::standard());

/// Line-delimited {"question_id","doc_id","text","token_count","label"}; label omitted when unknown.
void write_dataset(std::span<const ClassificationRecord> records, std::ostream& out);

}  // namespace condense
