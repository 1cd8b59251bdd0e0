#pragma once

#include "condense/corpus.hpp"
#include "condense/retrieve.hpp"
#include "condense/segmenter.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace condense {

/// A document together with its segmentation.
struct SegmentedDocument {
  const Document* document = nullptr;
  std::vector<Segment> segments;
};

struct ComparisonRow {
  std::string question_id;
  std::optional<double> baseline_mean_topk;
  std::optional<double> method_mean_topk;
  /// (method - baseline) / |baseline|; empty when baseline is 0 or the row failed.
  std::optional<double> relative_improvement;
  /// Non-empty when a retrieval error voided this row.
  std::string failure;
};

struct ComparisonReport {
  std::vector<ComparisonRow> per_question;
  std::size_t k = 0;
  std::string baseline_engine;
  std::string method_engine;

  /// Share of rows whose relative improvement exceeds `threshold`. Undefined rows count as misses.
  double fraction_improved_over(double threshold = 0.5) const;
};

std::optional<double> relative_improvement(double baseline, double method);

/// Mean top-k similarity per question (averaged over documents) for both engines.
/// A retrieval failure on any (question, document) pair voids only that question's row.
ComparisonReport compare_engines(std::span<const Question> questions,
                                 std::span<const SegmentedDocument> documents, std::size_t k,
                                 ScoringEngine& baseline, ScoringEngine& method,
                                 bool query_with_explanation = true);

enum class ReportFormat { kTable, kCsv, kJson };
ReportFormat parse_report_format(std::string_view name);

/// Rows sorted by question_id, numbers with 4 decimals, "undefined" for missing values.
/// Throws std::invalid_argument for a report without rows.
std::string render_report(const ComparisonReport& report, ReportFormat format);

}  // namespace condense
