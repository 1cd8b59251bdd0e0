#include "condense/export.hpp"

#include "condense/error.hpp"
#include "condense/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <ostream>

namespace condense {

std::string ClassificationRecord::text() const {
  std::string out = question_text;
  out += kQuestionSeparator;
  out += context;
  return out;
}

namespace {

/// Longest prefix of `text` holding at most `budget` tokens, preferring a sentence end.
std::u32string_view fit_prefix(std::u32string_view text, std::size_t budget, const Tokenizer& tokenizer,
                               const SentenceSplitter& splitter, std::size_t& tokens_out) {
  const std::vector<Token> tokens = tokenizer.tokenize_spans(text);
  auto tokens_before = [&](std::size_t offset) {
    return static_cast<std::size_t>(std::lower_bound(tokens.begin(), tokens.end(), offset,
                                                     [](const Token& t, std::size_t v) { return t.start < v; }) -
                                    tokens.begin());
  };
  const std::vector<std::size_t> ends = splitter.boundaries(text);
  for (auto it = ends.rbegin(); it != ends.rend(); ++it) {
    const std::size_t count = tokens_before(*it);
    if (count <= budget && count > 0) {
      tokens_out = count;
      return text.substr(0, *it);
    }
  }
  tokens_out = std::min(budget, tokens.size());
  if (tokens_out == 0) return text.substr(0, 0);
  return text.substr(0, tokens[tokens_out - 1].end);
}

}  // namespace

ClassificationRecord condense_pair(const Question& question, const SegmentedDocument& document,
                                   const RetrievalResult& result, std::optional<int> label,
                                   const ExportOptions& options, const Tokenizer& tokenizer,
                                   const SentenceSplitter& splitter) {
  if (options.token_budget < kMinTokenBudget) {
    throw BudgetTooSmall("token budget " + std::to_string(options.token_budget) + " is below the minimum of " +
                         std::to_string(kMinTokenBudget));
  }
  if (result.ranked.empty()) {
    throw NoScorableSegments("empty ranking for question '" + result.question_id + "' in '" + result.doc_id + "'");
  }
  const Document& doc = *document.document;

  ClassificationRecord record;
  record.question_id = question.question_id;
  record.doc_id = doc.doc_id;
  record.question_text = question.query_text(options.question_with_explanation);
  record.label = label;
  record.token_count = tokenizer.count(record.question_text) + 1;  // + question separator
  if (record.token_count >= options.token_budget) {
    throw BudgetTooSmall("question '" + question.question_id + "' alone needs " + std::to_string(record.token_count) +
                         " of " + std::to_string(options.token_budget) + " tokens");
  }

  std::u32string context;
  for (const RankedSegment& ranked : result.ranked) {
    const auto it = std::find_if(document.segments.begin(), document.segments.end(),
                                 [&](const Segment& s) { return s.segment_index == ranked.segment_index; });
    if (it == document.segments.end()) {
      throw DataError("ranked segment " + std::to_string(ranked.segment_index) + " is not a segment of '" +
                      doc.doc_id + "'");
    }
    const std::u32string_view text = doc.slice(it->span());
    const std::size_t tokens = tokenizer.count(text);
    const std::size_t separator = record.segment_indices.empty() ? 0 : 1;
    if (record.token_count + separator + tokens <= options.token_budget) {
      if (separator) context += unicode::to_u32(kSegmentSeparator);
      context.append(text);
      record.token_count += separator + tokens;
      record.segment_indices.push_back(ranked.segment_index);
      continue;
    }
    if (record.segment_indices.empty()) {
      std::size_t kept = 0;
      const std::u32string_view prefix =
          fit_prefix(text, options.token_budget - record.token_count, tokenizer, splitter, kept);
      context.append(prefix);
      record.token_count += kept;
      record.segment_indices.push_back(ranked.segment_index);
      record.truncated = true;
    }
    break;
  }
  record.context = unicode::to_utf8(context);
  return record;
}

std::vector<ClassificationRecord> export_dataset(std::span<const Question> questions,
                                                 std::span<const SegmentedDocument> documents,
                                                 std::span<const RetrievalResult> results,
                                                 std::span<const GroundTruthAnnotation> annotations,
                                                 const ExportOptions& options, const Tokenizer& tokenizer,
                                                 const SentenceSplitter& splitter) {
  std::map<std::pair<std::string, std::string>, const RetrievalResult*> by_pair;
  for (const RetrievalResult& r : results) by_pair.emplace(std::pair(r.question_id, r.doc_id), &r);
  std::map<std::pair<std::string, std::string>, int> labels;
  for (const GroundTruthAnnotation& a : annotations) labels.emplace(std::pair(a.question_id, a.doc_id), a.label);

  std::vector<ClassificationRecord> records;
  records.reserve(questions.size() * documents.size());
  for (const Question& q : questions) {
    for (const SegmentedDocument& sd : documents) {
      const auto key = std::pair(q.question_id, sd.document->doc_id);
      const auto it = by_pair.find(key);
      if (it == by_pair.end()) throw MissingResult(q.question_id, sd.document->doc_id);
      std::optional<int> label;
      if (const auto l = labels.find(key); l != labels.end()) label = l->second;
      records.push_back(condense_pair(q, sd, *it->second, label, options, tokenizer, splitter));
      if (records.back().token_count > options.token_budget) {
        throw std::logic_error("exported record exceeds the token budget");
      }
    }
  }
  return records;
}

void write_dataset(std::span<const ClassificationRecord> records, std::ostream& out) {
  for (const ClassificationRecord& r : records) {
    nlohmann::ordered_json record = {
        {"question_id", r.question_id}, {"doc_id", r.doc_id}, {"text", r.text()}, {"token_count", r.token_count}};
    if (r.label) record["label"] = *r.label;
    out << record.dump() << '\n';
  }
}

}  // namespace condense
