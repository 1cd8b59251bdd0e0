#pragma once

#include "condense/corpus.hpp"
#include "condense/sentences.hpp"
#include "condense/tokenizer.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace condense {

enum class BoundaryPolicy { kParagraphEnd, kSentenceEnd, kTokenHard };

std::string_view to_string(BoundaryPolicy policy);
/// Accepts "paragraph", "sentence", "token". Throws ConfigError otherwise.
BoundaryPolicy parse_boundary_policy(std::string_view name);

/// Window sizing for context-aware partitioning. Token counts use the vectorizer's tokenizer.
struct SegmenterConfig {
  std::size_t target_window_tokens = 180;
  std::size_t max_window_tokens = 300;
  double overlap_fraction = 0.15;
  BoundaryPolicy boundary_policy = BoundaryPolicy::kParagraphEnd;

  /// Throws ConfigError when the cursor could stall or the cap is below the target.
  void validate() const;
};

struct Segment {
  std::string doc_id;
  std::size_t segment_index = 0;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::size_t token_count = 0;
  std::size_t overlap_with_prev_chars = 0;

  Span span() const noexcept { return {start_char, end_char}; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Token positions and structural boundaries of one document, computed once and shared by the
/// window and overlap rules. Holds a reference to the document.
class DocumentLayout {
 public:
  DocumentLayout(const Document& doc, const Tokenizer& tokenizer = Tokenizer::standard(),
                 const SentenceSplitter& splitter = SentenceSplitter::standard());

  const Document& document() const noexcept { return *doc_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  /// Sentence ends, paragraph ends included, ascending.
  const std::vector<std::size_t>& sentence_ends() const noexcept { return sentence_ends_; }
  /// First non-space offset of each sentence, paragraph starts included, ascending.
  const std::vector<std::size_t>& sentence_starts() const noexcept { return sentence_starts_; }
  const std::vector<std::size_t>& paragraph_ends() const noexcept { return paragraph_ends_; }

  /// Index of the first token starting at or after `offset`.
  std::size_t first_token_at(std::size_t offset) const;
  /// Tokens whose start lies in [span.start, span.end).
  std::size_t token_count(Span span) const;
  /// Index of the paragraph containing `offset`, or npos.
  std::size_t paragraph_at(std::size_t offset) const;

 private:
  const Document* doc_;
  std::vector<Token> tokens_;
  std::vector<std::size_t> sentence_ends_;
  std::vector<std::size_t> sentence_starts_;
  std::vector<std::size_t> paragraph_ends_;
};

/// End of the window starting at `position`: the first boundary allowed by the policy that lies at
/// least `target_window_tokens` ahead, falling back to exactly `max_window_tokens` tokens when no
/// such boundary fits under the cap, and never past the document end.
/// Throws InvalidPosition when `position` is outside every paragraph.
std::size_t window_end_at(const DocumentLayout& layout, std::size_t position,
                          const SegmenterConfig& config);

/// Characters the next window re-reads from `previous`: its last
/// ceil(overlap_fraction * token_count) tokens, widened back to a sentence start unless the policy
/// is kTokenHard. Zero when the window already reaches the document end.
std::size_t overlap_at(const DocumentLayout& layout, const Segment& previous,
                       const SegmenterConfig& config);

/// Greedy left-to-right windowing. Throws EmptyDocument for a document without paragraphs.
std::vector<Segment> segment_document(const DocumentLayout& layout, const SegmenterConfig& config);
std::vector<Segment> segment_document(const Document& doc, const SegmenterConfig& config,
                                      const Tokenizer& tokenizer = Tokenizer::standard());

void write_segments(std::span<const Segment> segments, std::ostream& out);
std::vector<Segment> read_segments(std::istream& in);

}  // namespace condense
