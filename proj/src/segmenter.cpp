#include "condense/segmenter.hpp"

#include "condense/error.hpp"
#include "condense/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace condense {

std::string_view to_string(BoundaryPolicy policy) {
  switch (policy) {
    case BoundaryPolicy::kParagraphEnd: return "paragraph";
    case BoundaryPolicy::kSentenceEnd: return "sentence";
    case BoundaryPolicy::kTokenHard: return "token";
  }
  return "paragraph";
}

BoundaryPolicy parse_boundary_policy(std::string_view name) {
  if (name == "paragraph") return BoundaryPolicy::kParagraphEnd;
  if (name == "sentence") return BoundaryPolicy::kSentenceEnd;
  if (name == "token") return BoundaryPolicy::kTokenHard;
  throw ConfigError("unknown boundary policy '" + std::string(name) +
                    "' (expected paragraph, sentence or token)");
}

void SegmenterConfig::validate() const {
  if (target_window_tokens == 0) throw ConfigError("target_window_tokens must be positive");
  if (max_window_tokens < target_window_tokens) {
    throw ConfigError("max_window_tokens must be at least target_window_tokens");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 0.5)) {
    throw ConfigError("overlap_fraction must lie in [0, 0.5]");
  }
}

DocumentLayout::DocumentLayout(const Document& doc, const Tokenizer& tokenizer,
                               const SentenceSplitter& splitter)
    : doc_(&doc), tokens_(tokenizer.tokenize_spans(doc.text)) {
  const std::u32string_view text(doc.text);
  for (const Span& paragraph : doc.paragraphs) {
    paragraph_ends_.push_back(paragraph.end);
    sentence_starts_.push_back(paragraph.start);
    for (std::size_t end : splitter.boundaries(text.substr(paragraph.start, paragraph.length()))) {
      const std::size_t absolute = paragraph.start + end;
      sentence_ends_.push_back(absolute);
      std::size_t next = absolute;
      while (next < paragraph.end && unicode::is_space(text[next])) ++next;
      sentence_starts_.push_back(next);
    }
    sentence_ends_.push_back(paragraph.end);
  }
}

std::size_t DocumentLayout::first_token_at(std::size_t offset) const {
  const auto it = std::lower_bound(tokens_.begin(), tokens_.end(), offset,
                                   [](const Token& t, std::size_t value) { return t.start < value; });
  return static_cast<std::size_t>(it - tokens_.begin());
}

std::size_t DocumentLayout::token_count(Span span) const {
  if (span.end <= span.start) return 0;
  return first_token_at(span.end) - first_token_at(span.start);
}

std::size_t DocumentLayout::paragraph_at(std::size_t offset) const {
  const auto& paragraphs = doc_->paragraphs;
  const auto it = std::upper_bound(paragraphs.begin(), paragraphs.end(), offset,
                                   [](std::size_t value, const Span& p) { return value < p.end; });
  if (it == paragraphs.end() || offset < it->start) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - paragraphs.begin());
}

namespace {

/// Smallest element of `sorted` in [lo, hi], if any.
std::optional<std::size_t> first_in_range(const std::vector<std::size_t>& sorted, std::size_t lo,
                                          std::size_t hi) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), lo);
  if (it == sorted.end() || *it > hi) return std::nullopt;
  return *it;
}

}  // namespace

std::size_t window_end_at(const DocumentLayout& layout, std::size_t position,
                          const SegmenterConfig& config) {
  if (layout.paragraph_at(position) == static_cast<std::size_t>(-1)) throw InvalidPosition(position);

  const auto& tokens = layout.tokens();
  const std::size_t doc_end = layout.document().length();
  const std::size_t first = layout.first_token_at(position);
  const std::size_t remaining = tokens.size() - first;
  if (remaining < config.target_window_tokens) return doc_end;

  // Any boundary in [target_end, cap_limit] yields a window of target..max tokens.
  const std::size_t target_end = tokens[first + config.target_window_tokens - 1].end;
  const bool capped = remaining > config.max_window_tokens;
  const std::size_t cap_limit = capped ? tokens[first + config.max_window_tokens].start : doc_end;
  const std::size_t hard_end = capped ? tokens[first + config.max_window_tokens - 1].end : doc_end;

  std::optional<std::size_t> end;
  switch (config.boundary_policy) {
    case BoundaryPolicy::kParagraphEnd:
      end = first_in_range(layout.paragraph_ends(), target_end, cap_limit);
      break;
    case BoundaryPolicy::kSentenceEnd:
      end = first_in_range(layout.sentence_ends(), target_end, cap_limit);
      break;
    case BoundaryPolicy::kTokenHard:
      end = target_end;
      break;
  }
  return std::min(end.value_or(hard_end), doc_end);
}

std::size_t overlap_at(const DocumentLayout& layout, const Segment& previous,
                       const SegmenterConfig& config) {
  if (config.overlap_fraction <= 0.0 || previous.end_char >= layout.document().length()) return 0;
  const auto wanted = static_cast<std::size_t>(
      std::ceil(config.overlap_fraction * static_cast<double>(previous.token_count) - 1e-9));
  if (wanted == 0) return 0;

  const std::size_t first = layout.first_token_at(previous.start_char);
  const std::size_t last = layout.first_token_at(previous.end_char);
  if (last - first == 0) return 0;
  const std::size_t take = std::min(wanted, last - first);
  std::size_t start = layout.tokens()[last - take].start;

  if (config.boundary_policy != BoundaryPolicy::kTokenHard) {
    const auto& starts = layout.sentence_starts();
    const auto it = std::upper_bound(starts.begin(), starts.end(), start);
    if (it != starts.begin() && *std::prev(it) > previous.start_char) start = *std::prev(it);
  }
  return previous.end_char - start;
}

std::vector<Segment> segment_document(const DocumentLayout& layout, const SegmenterConfig& config) {
  config.validate();
  const Document& doc = layout.document();
  if (doc.paragraphs.empty()) throw EmptyDocument(doc.doc_id);

  std::vector<Segment> segments;
  const std::size_t doc_end = doc.length();
  std::size_t position = doc.paragraphs.front().start;
  while (true) {
    Segment segment;
    segment.doc_id = doc.doc_id;
    segment.segment_index = segments.size();
    segment.start_char = position;
    segment.end_char = window_end_at(layout, position, config);
    segment.token_count = layout.token_count(segment.span());
    if (!segments.empty() && position < segments.back().end_char) {
      segment.overlap_with_prev_chars = segments.back().end_char - position;
    }
    segments.push_back(std::move(segment));
    const Segment& current = segments.back();
    if (current.end_char >= doc_end) break;

    std::size_t next = current.end_char - overlap_at(layout, current, config);
    if (next <= current.start_char) next = current.end_char;
    if (layout.paragraph_at(next) == static_cast<std::size_t>(-1)) {
      const auto& paragraphs = doc.paragraphs;
      const auto it = std::lower_bound(paragraphs.begin(), paragraphs.end(), next,
                                       [](const Span& p, std::size_t value) { return p.start < value; });
      if (it == paragraphs.end()) break;
      next = it->start;
    }
    position = next;
  }
  return segments;
}

std::vector<Segment> segment_document(const Document& doc, const SegmenterConfig& config,
                                      const Tokenizer& tokenizer) {
  const DocumentLayout layout(doc, tokenizer);
  return segment_document(layout, config);
}

void write_segments(std::span<const Segment> segments, std::ostream& out) {
  for (const Segment& s : segments) {
    nlohmann::ordered_json record = {{"doc_id", s.doc_id},
                                     {"segment_index", s.segment_index},
                                     {"start_char", s.start_char},
                                     {"end_char", s.end_char},
                                     {"token_count", s.token_count},
                                     {"overlap_with_prev_chars", s.overlap_with_prev_chars}};
    out << record.dump() << '\n';
  }
}

std::vector<Segment> read_segments(std::istream& in) {
  std::vector<Segment> segments;
  std::string text;
  std::size_t line = 0;
  auto field = [&](const nlohmann::json& record, const char* key) -> std::size_t {
    const auto it = record.find(key);
    if (it == record.end() || !it->is_number_unsigned()) {
      throw ParseError(line, std::string("missing or non-integer field '") + key + "'");
    }
    return it->get<std::size_t>();
  };
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("doc_id") || !record["doc_id"].is_string()) {
      throw ParseError(line, "segment record needs a string 'doc_id'");
    }
    Segment s;
    s.doc_id = record["doc_id"].get<std::string>();
    s.segment_index = field(record, "segment_index");
    s.start_char = field(record, "start_char");
    s.end_char = field(record, "end_char");
    s.token_count = field(record, "token_count");
    s.overlap_with_prev_chars = field(record, "overlap_with_prev_chars");
    if (s.start_char >= s.end_char) throw ParseError(line, "segment is empty (start_char >= end_char)");
    segments.push_back(std::move(s));
  }
  return segments;
}

}  // namespace condense
