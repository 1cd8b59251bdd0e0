#include "condense/evaluate.hpp"

#include "condense/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace condense {

double ComparisonReport::fraction_improved_over(double threshold) const {
  if (per_question.empty()) return 0.0;
  const auto improved = std::count_if(per_question.begin(), per_question.end(), [&](const ComparisonRow& row) {
    return row.relative_improvement && *row.relative_improvement > threshold;
  });
  return static_cast<double>(improved) / static_cast<double>(per_question.size());
}

std::optional<double> relative_improvement(double baseline, double method) {
  if (baseline == 0.0) return std::nullopt;
  return (method - baseline) / std::abs(baseline);
}

namespace {

/// Per question: sum of mean top-k over documents, document count, first failure.
struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
  std::string failure;
};

void accumulate(std::span<const Question> questions, std::span<const SegmentedDocument> documents,
                std::size_t k, ScoringEngine& engine, bool with_explanation, std::vector<Accumulator>& acc) {
  std::vector<std::string> queries;
  queries.reserve(questions.size());
  for (const Question& q : questions) queries.push_back(q.query_text(with_explanation));

  for (const SegmentedDocument& sd : documents) {
    const std::vector<std::string> texts = segment_texts(*sd.document, sd.segments);
    const ScoreMatrix scores = engine.score(queries, texts);
    for (std::size_t i = 0; i < questions.size(); ++i) {
      try {
        const RetrievalResult result = rank_scores(questions[i].question_id, sd.document->doc_id, engine.name(),
                                                   scores[i], sd.segments, k);
        acc[i].sum += mean_topk_score(result);
        ++acc[i].count;
      } catch (const DataError& e) {
        if (acc[i].failure.empty()) acc[i].failure = engine.name() + ": " + e.what();
      }
    }
  }
}

std::string number(const std::optional<double>& value) {
  return value ? fmt::format("{:.4f}", *value + 0.0) : std::string("undefined");
}

}  // namespace

ComparisonReport compare_engines(std::span<const Question> questions,
                                 std::span<const SegmentedDocument> documents, std::size_t k,
                                 ScoringEngine& baseline, ScoringEngine& method, bool query_with_explanation) {
  if (k == 0) throw ConfigError("k must be at least 1");
  std::vector<Accumulator> base_acc(questions.size());
  std::vector<Accumulator> method_acc(questions.size());
  accumulate(questions, documents, k, baseline, query_with_explanation, base_acc);
  accumulate(questions, documents, k, method, query_with_explanation, method_acc);

  ComparisonReport report;
  report.k = k;
  report.baseline_engine = baseline.name();
  report.method_engine = method.name();
  for (std::size_t i = 0; i < questions.size(); ++i) {
    ComparisonRow row;
    row.question_id = questions[i].question_id;
    if (!base_acc[i].failure.empty() || !method_acc[i].failure.empty()) {
      row.failure = !base_acc[i].failure.empty() ? base_acc[i].failure : method_acc[i].failure;
    } else if (base_acc[i].count == 0) {
      row.failure = "no documents";
    } else {
      row.baseline_mean_topk = base_acc[i].sum / static_cast<double>(base_acc[i].count);
      row.method_mean_topk = method_acc[i].sum / static_cast<double>(method_acc[i].count);
      row.relative_improvement = relative_improvement(*row.baseline_mean_topk, *row.method_mean_topk);
    }
    report.per_question.push_back(std::move(row));
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected table, csv or json)");
}

std::string render_report(const ComparisonReport& report, ReportFormat format) {
  if (report.per_question.empty()) throw std::invalid_argument("render_report: report has no rows");
  std::vector<const ComparisonRow*> rows;
  for (const ComparisonRow& row : report.per_question) rows.push_back(&row);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow* a, const ComparisonRow* b) { return a->question_id < b->question_id; });
  const double fraction = report.fraction_improved_over(0.5);

  std::string out;
  switch (format) {
    case ReportFormat::kTable: {
      std::size_t width = std::string_view("question_id").size();
      for (const ComparisonRow* row : rows) width = std::max(width, row->question_id.size());
      out += fmt::format("# metric: mean of the top-{} cosine similarities per question, averaged over documents\n",
                         report.k);
      out += fmt::format("# baseline: {}\n# method: {}\n", report.baseline_engine, report.method_engine);
      out += fmt::format("{:<{}}  {:>10}  {:>10}  {:>11}\n", "question_id", width, "baseline", "method", "improvement");
      for (const ComparisonRow* row : rows) {
        out += fmt::format("{:<{}}  {:>10}  {:>10}  {:>11}", row->question_id, width, number(row->baseline_mean_topk),
                           number(row->method_mean_topk), number(row->relative_improvement));
        if (!row->failure.empty()) out += "  (failed: " + row->failure + ")";
        out += '\n';
      }
      out += fmt::format("# questions improved by more than 50%: {:.4f}\n", fraction);
      break;
    }
    case ReportFormat::kCsv: {
      out += "question_id,baseline_mean_topk,method_mean_topk,relative_improvement,failure\n";
      auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
          if (c == '"') q += '"';
          q += c;
        }
        return q + "\"";
      };
      for (const ComparisonRow* row : rows) {
        out += fmt::format("{},{},{},{},{}\n", quote(row->question_id), number(row->baseline_mean_topk),
                           number(row->method_mean_topk), number(row->relative_improvement), quote(row->failure));
      }
      break;
    }
    case ReportFormat::kJson: {
      // Numbers are emitted as fixed 4-decimal literals so the bytes do not depend on float printing.
      using nlohmann::json;
      out += fmt::format(R"({{"k":{},"baseline":{},"method":{},"metric":"mean_topk_cosine","fraction_improved_over_0.5":{:.4f},"per_question":[)",
                         report.k, json(report.baseline_engine).dump(), json(report.method_engine).dump(), fraction);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto field = [](const std::optional<double>& v) { return v ? number(v) : std::string("\"undefined\""); };
        if (i > 0) out += ',';
        out += fmt::format(R"({{"question_id":{},"baseline_mean_topk":{},"method_mean_topk":{},"relative_improvement":{})",
                           json(rows[i]->question_id).dump(), field(rows[i]->baseline_mean_topk),
                           field(rows[i]->method_mean_topk), field(rows[i]->relative_improvement));
        if (!rows[i]->failure.empty()) out += R"(,"failure":)" + json(rows[i]->failure).dump();
        out += '}';
      }
      out += "]}\n";
      break;
    }
  }
  return out;
}

}  // namespace condense
