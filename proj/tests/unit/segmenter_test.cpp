#include "condense/error.hpp"
#include "condense/segmenter.hpp"

#include "support/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace condense {
namespace {

using testing::document_with_paragraphs;

SegmenterConfig config(std::size_t target, std::size_t max, double overlap, BoundaryPolicy policy) {
  SegmenterConfig c;
  c.target_window_tokens = target;
  c.max_window_tokens = max;
  c.overlap_fraction = overlap;
  c.boundary_policy = policy;
  return c;
}

TEST(SegmenterConfig, DefaultsAndValidation) {
  const SegmenterConfig defaults;
  EXPECT_EQ(defaults.target_window_tokens, 180u);
  EXPECT_EQ(defaults.max_window_tokens, 300u);
  EXPECT_DOUBLE_EQ(defaults.overlap_fraction, 0.15);
  EXPECT_EQ(defaults.boundary_policy, BoundaryPolicy::kParagraphEnd);
  EXPECT_NO_THROW(defaults.validate());
  EXPECT_THROW(config(0, 10, 0, BoundaryPolicy::kTokenHard).validate(), ConfigError);
  EXPECT_THROW(config(20, 10, 0, BoundaryPolicy::kTokenHard).validate(), ConfigError);
  EXPECT_THROW(config(10, 10, 0.6, BoundaryPolicy::kTokenHard).validate(), ConfigError);
  EXPECT_THROW(config(10, 10, -0.1, BoundaryPolicy::kTokenHard).validate(), ConfigError);
}

TEST(WindowEnd, ExtendsToTheParagraphThatPassesTheTarget) {
  const Document doc = document_with_paragraphs({50, 100, 100, 60});
  const DocumentLayout layout(doc);
  // Cumulative tokens 50, 150, 250: the third paragraph end is the first to reach 200.
  EXPECT_EQ(window_end_at(layout, 0, config(200, 300, 0, BoundaryPolicy::kParagraphEnd)), doc.paragraphs[2].end);
}

TEST(WindowEnd, ClampsAtDocumentEnd) {
  const Document doc = document_with_paragraphs({50, 100, 10});
  const DocumentLayout layout(doc);
  EXPECT_EQ(window_end_at(layout, doc.paragraphs[2].start, config(200, 300, 0, BoundaryPolicy::kParagraphEnd)),
            doc.length());
}

TEST(WindowEnd, HardCapInsideOneLongParagraph) {
  const Document doc = document_with_paragraphs({1000});
  const DocumentLayout layout(doc);
  const std::size_t end = window_end_at(layout, 0, config(200, 300, 0, BoundaryPolicy::kParagraphEnd));
  EXPECT_EQ(end, layout.tokens()[299].end);
  EXPECT_EQ(layout.token_count({0, end}), 300u);
}

TEST(WindowEnd, SentencePolicyStopsAtFirstSentenceEndPastTarget) {
  const Document doc = document_with_paragraphs({1000}, 7);
  const DocumentLayout layout(doc);
  const std::size_t end = window_end_at(layout, 0, config(20, 40, 0, BoundaryPolicy::kSentenceEnd));
  // Sentences of 7 tokens: 21 is the first multiple of 7 reaching 20.
  EXPECT_EQ(layout.token_count({0, end}), 21u);
  EXPECT_EQ(doc.text[end - 1], U'.');
}

TEST(WindowEnd, TokenPolicyStopsExactlyAtTarget) {
  const Document doc = document_with_paragraphs({120});
  const DocumentLayout layout(doc);
  EXPECT_EQ(window_end_at(layout, 0, config(33, 50, 0, BoundaryPolicy::kTokenHard)), layout.tokens()[32].end);
}

TEST(WindowEnd, RejectsPositionsOutsideParagraphs) {
  const Document doc = document_with_paragraphs({10, 10});
  const DocumentLayout layout(doc);
  const auto c = config(5, 10, 0, BoundaryPolicy::kParagraphEnd);
  EXPECT_THROW(window_end_at(layout, doc.paragraphs[0].end, c), InvalidPosition);
  EXPECT_THROW(window_end_at(layout, doc.length() + 5, c), InvalidPosition);
}

TEST(Overlap, ZeroFractionMeansNoOverlap) {
  const Document doc = document_with_paragraphs({400});
  const DocumentLayout layout(doc);
  const auto c = config(200, 300, 0.0, BoundaryPolicy::kTokenHard);
  const Segment prev{doc.doc_id, 0, 0, window_end_at(layout, 0, c), 200, 0};
  EXPECT_EQ(overlap_at(layout, prev, c), 0u);
}

TEST(Overlap, TokenHardTakesTheLastTokensOfThePreviousWindow) {
  const Document doc = document_with_paragraphs({400});
  const DocumentLayout layout(doc);
  const auto c = config(200, 300, 0.1, BoundaryPolicy::kTokenHard);
  const std::size_t end = window_end_at(layout, 0, c);
  const Segment prev{doc.doc_id, 0, 0, end, layout.token_count({0, end}), 0};
  ASSERT_EQ(prev.token_count, 200u);
  // ceil(0.1 * 200) = 20 tokens: tokens 180..199.
  EXPECT_EQ(overlap_at(layout, prev, c), end - layout.tokens()[180].start);
}

TEST(Overlap, SnapsBackToSentenceStart) {
  const Document doc = document_with_paragraphs({400}, 8);
  const DocumentLayout layout(doc);
  const auto c = config(200, 300, 0.1, BoundaryPolicy::kSentenceEnd);
  const std::size_t end = window_end_at(layout, 0, c);
  const Segment prev{doc.doc_id, 0, 0, end, layout.token_count({0, end}), 0};
  ASSERT_EQ(prev.token_count, 200u);
  // Last 20 tokens start at token 180, inside the sentence that begins at token 176.
  EXPECT_EQ(overlap_at(layout, prev, c), end - layout.tokens()[176].start);
}

TEST(Overlap, UnusedWhenWindowReachesDocumentEnd) {
  const Document doc = document_with_paragraphs({100});
  const DocumentLayout layout(doc);
  const auto c = config(200, 300, 0.3, BoundaryPolicy::kTokenHard);
  const Segment prev{doc.doc_id, 0, 0, doc.length(), 100, 0};
  EXPECT_EQ(overlap_at(layout, prev, c), 0u);
}

TEST(SegmentDocument, SmallDocumentIsOneSegment) {
  const Document doc = document_with_paragraphs({60, 40});
  const auto segments = segment_document(doc, config(200, 300, 0.15, BoundaryPolicy::kParagraphEnd));
  ASSERT_EQ(segments.size(), 1u);
  EXPECT_EQ(segments[0].start_char, 0u);
  EXPECT_EQ(segments[0].end_char, doc.length());
  EXPECT_EQ(segments[0].token_count, 100u);
}

TEST(SegmentDocument, GreedyParagraphWindowsWithoutOverlap) {
  const Document doc = document_with_paragraphs({150, 150, 150});
  const auto segments = segment_document(doc, config(200, 400, 0.0, BoundaryPolicy::kParagraphEnd));
  ASSERT_EQ(segments.size(), 2u);
  EXPECT_EQ(segments[0].span(), (Span{doc.paragraphs[0].start, doc.paragraphs[1].end}));
  EXPECT_EQ(segments[1].span(), doc.paragraphs[2]);
  EXPECT_EQ(segments[0].token_count, 300u);
  EXPECT_EQ(segments[1].token_count, 150u);
  EXPECT_EQ(segments[1].overlap_with_prev_chars, 0u);
}

TEST(SegmentDocument, OverlapReachesBackIntoPreviousParagraph) {
  const Document doc = document_with_paragraphs({150, 150, 150});
  const auto segments = segment_document(doc, config(200, 400, 0.1, BoundaryPolicy::kParagraphEnd));
  ASSERT_EQ(segments.size(), 2u);
  const Span second_paragraph = doc.paragraphs[1];
  EXPECT_GT(segments[1].start_char, second_paragraph.start);
  EXPECT_LT(segments[1].start_char, second_paragraph.end);
  EXPECT_GT(segments[1].overlap_with_prev_chars, 0u);
  EXPECT_EQ(segments[1].overlap_with_prev_chars, segments[0].end_char - segments[1].start_char);
  EXPECT_EQ(segments[1].end_char, doc.length());
}

TEST(SegmentDocument, InvariantsOnRandomDocuments) {
  std::mt19937_64 rng(2024);
  const BoundaryPolicy policies[] = {BoundaryPolicy::kParagraphEnd, BoundaryPolicy::kSentenceEnd,
                                     BoundaryPolicy::kTokenHard};
  for (int trial = 0; trial < 30; ++trial) {
    const Document doc = ingest_document("r", "", testing::random_text(rng, 5 + rng() % 40));
    const DocumentLayout layout(doc);
    const std::size_t target = 10 + rng() % 120;
    const auto c = config(target, target + rng() % 100, 0.05 * static_cast<double>(rng() % 11),
                          policies[rng() % 3]);
    const auto segments = segment_document(layout, c);
    ASSERT_FALSE(segments.empty());
    std::size_t covered_to = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const Segment& s = segments[i];
      EXPECT_EQ(s.segment_index, i);
      EXPECT_LT(s.start_char, s.end_char);
      EXPECT_LE(s.token_count, c.max_window_tokens);
      EXPECT_EQ(s.token_count, layout.token_count(s.span()));
      if (i > 0) {
        EXPECT_GT(s.start_char, segments[i - 1].start_char);
        const std::size_t expected = s.start_char < segments[i - 1].end_char ? segments[i - 1].end_char - s.start_char : 0;
        EXPECT_EQ(s.overlap_with_prev_chars, expected);
      }
      // Everything between the covered prefix and this start must be a paragraph separator.
      for (std::size_t p = covered_to; p < s.start_char; ++p) EXPECT_EQ(doc.text[p], U'\n');
      covered_to = std::max(covered_to, s.end_char);
    }
    EXPECT_EQ(covered_to, doc.length());
    EXPECT_EQ(segment_document(layout, c), segments);
  }
}

TEST(SegmentDocument, SentencePolicyNeverCutsInsideASentence) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Document doc = ingest_document("r", "", testing::random_text(rng, 20));
    const DocumentLayout layout(doc);
    const auto c = config(40, 400, 0.2, BoundaryPolicy::kSentenceEnd);
    const auto& ends = layout.sentence_ends();
    for (const Segment& s : segment_document(layout, c)) {
      if (s.token_count == c.max_window_tokens) continue;  // hard-cap fallback
      EXPECT_TRUE(std::binary_search(ends.begin(), ends.end(), s.end_char)) << s.end_char;
    }
  }
}

TEST(SegmentFile, RoundTrip) {
  const Document doc = document_with_paragraphs({150, 150, 150});
  const auto segments = segment_document(doc, config(200, 400, 0.1, BoundaryPolicy::kParagraphEnd));
  std::stringstream buffer;
  write_segments(segments, buffer);
  EXPECT_EQ(read_segments(buffer), segments);
}

TEST(SegmentFile, RejectsEmptySegment) {
  std::stringstream in(
      R"({"doc_id":"d","segment_index":0,"start_char":5,"end_char":5,"token_count":0,"overlap_with_prev_chars":0})");
  EXPECT_THROW(read_segments(in), ParseError);
}

}  // namespace
}  // namespace condense
