#include "condense/error.hpp"
#include "condense/groundtruth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace condense {
namespace {

Vocabulary three_segment_vocab() {
  const std::vector<std::string> segments{"Tariff quota for goods.", "Goods and tariff schedule.",
                                          "Goods origin rules and phytosanitary checks."};
  return fit_vocabulary(segments);
}

TEST(Keywords, RareTermFirst) {
  const Vocabulary vocab = three_segment_vocab();
  // df: goods 3, tariff 2, phytosanitary 1.
  const Question q = make_question("q", "Goods tariff phytosanitary?", "ignored explanation words");
  const KeywordSet set = extract_keywords(q, vocab);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.keywords[0].first, "phytosanitary");
  EXPECT_EQ(set.keywords[1].first, "tariff");
  EXPECT_EQ(set.keywords[2].first, "goods");
  EXPECT_NEAR(set.keywords[0].second, std::log(4.0 / 2.0) + 1.0, 1e-12);
  EXPECT_NEAR(set.keywords[2].second, 1.0, 1e-12);
}

TEST(Keywords, SaturatesAndTruncates) {
  const Vocabulary vocab = three_segment_vocab();
  const Question q = make_question("q", "goods tariff quota", std::nullopt);
  EXPECT_EQ(extract_keywords(q, vocab, 50).size(), 3u);
  EXPECT_EQ(extract_keywords(q, vocab, 1).size(), 1u);
}

TEST(Keywords, TiesKeepQuestionOrder) {
  const Vocabulary vocab = three_segment_vocab();
  const Question q = make_question("q", "schedule quota origin", std::nullopt);
  const KeywordSet set = extract_keywords(q, vocab);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.keywords[0].first, "schedule");
  EXPECT_EQ(set.keywords[1].first, "quota");
  EXPECT_EQ(set.keywords[2].first, "origin");
}

TEST(Keywords, StopWordsOnly) {
  const Question q = make_question("q", "What is the of and?", std::nullopt);
  EXPECT_THROW(extract_keywords(q, three_segment_vocab()), NoKeywords);
}

TEST(Coverage, Examples) {
  KeywordSet set{"q", {{"tariff", 2.0}, {"quota", 1.5}, {"goods", 1.0}, {"origin", 1.0}}};
  EXPECT_DOUBLE_EQ(keyword_coverage("Origin of goods: tariff QUOTA.", set), 1.0);
  EXPECT_DOUBLE_EQ(keyword_coverage("Nothing relevant here.", set), 0.0);
  EXPECT_DOUBLE_EQ(keyword_coverage("Tariff on goods.", set), 0.5);
}

// Five segments; 1, 2 and 3 overlap their predecessor by 10 characters.
std::vector<Segment> overlapping_segments() {
  return {{"d", 0, 0, 100, 10, 0},
          {"d", 1, 90, 200, 10, 10},
          {"d", 2, 190, 300, 10, 10},
          {"d", 3, 290, 400, 10, 10},
          {"d", 4, 400, 500, 10, 0}};
}

RetrievalResult ranking(std::vector<std::size_t> order) {
  RetrievalResult r{"q", "d", "tfidf", {}, order.size()};
  double score = 1.0;
  for (std::size_t i : order) r.ranked.push_back({i, score -= 0.1});
  return r;
}

TEST(AnswerInTopk, Examples) {
  const auto segments = overlapping_segments();
  GroundTruthAnnotation a{"q", "d", 1, {{20, 40}}};
  EXPECT_EQ(answer_in_topk(ranking({0, 1}), a, segments, 500), (TopkHit{true, 1}));
  a.answer_spans = {{420, 450}};
  EXPECT_EQ(answer_in_topk(ranking({0, 1}), a, segments, 500), (TopkHit{false, std::nullopt}));
}

TEST(AnswerInTopk, StraddlingOverlapReportsFirstRank) {
  const auto segments = overlapping_segments();
  // [185, 195) lies partly in the 190..200 region that segments 1 and 2 share.
  const GroundTruthAnnotation a{"q", "d", 1, {{185, 195}}};
  EXPECT_EQ(answer_in_topk(ranking({4, 1, 2}), a, segments, 500), (TopkHit{true, 2}));
  EXPECT_EQ(answer_in_topk(ranking({4, 2, 1}), a, segments, 500), (TopkHit{true, 2}));
}

TEST(AnswerInTopk, TouchingIsNotOverlapping) {
  const auto segments = overlapping_segments();
  const GroundTruthAnnotation a{"q", "d", 1, {{100, 110}}};
  EXPECT_EQ(answer_in_topk(ranking({0}), a, segments, 500).hit, false);
}

TEST(AnswerInTopk, OutOfBounds) {
  const GroundTruthAnnotation a{"q", "d", 1, {{480, 520}}};
  EXPECT_THROW(answer_in_topk(ranking({0}), a, overlapping_segments(), 500), AnnotationOutOfBounds);
}

TEST(Recall, Examples) {
  SegmentIndex index;
  index.documents["d"] = {overlapping_segments(), 500};
  std::vector<RetrievalResult> results;
  std::vector<GroundTruthAnnotation> annotations;
  for (int i = 0; i < 4; ++i) {
    RetrievalResult r = ranking({static_cast<std::size_t>(i)});
    r.question_id = "q" + std::to_string(i);
    results.push_back(r);
    annotations.push_back({r.question_id, "d", 1, {{static_cast<std::size_t>(i) * 100 + 50, static_cast<std::size_t>(i) * 100 + 60}}});
  }
  EXPECT_DOUBLE_EQ(recall_at_k(results, annotations, index), 1.0);
  annotations[3].answer_spans = {{450, 460}};
  EXPECT_DOUBLE_EQ(recall_at_k(results, annotations, index), 0.75);

  annotations.push_back({"q9", "d", 0, {}});
  EXPECT_DOUBLE_EQ(recall_at_k(results, annotations, index), 0.75);

  const std::vector<GroundTruthAnnotation> negatives{{"q0", "d", 0, {}}};
  EXPECT_THROW(recall_at_k(results, negatives, index), NoPositivePairs);
  const std::vector<GroundTruthAnnotation> missing{{"qx", "d", 1, {{0, 5}}}};
  EXPECT_THROW(recall_at_k(results, missing, index), MissingResult);
}

TEST(AnnotationFile, RoundTrip) {
  const std::vector<GroundTruthAnnotation> in{{"q1", "d1", 1, {{3, 9}, {20, 25}}}, {"q1", "d2", 0, {}}};
  std::stringstream buffer;
  write_annotations(in, buffer);
  EXPECT_EQ(read_annotations(buffer), in);
}

void expect_parse_error(const std::string& text, std::size_t line) {
  std::stringstream in(text);
  try {
    read_annotations(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(AnnotationFile, Errors) {
  const std::string ok = R"({"question_id":"q","doc_id":"d","label":1,"answer_spans":[{"start":0,"end":4}]})";
  expect_parse_error(ok + "\n{oops", 2);
  expect_parse_error(R"({"question_id":"q","doc_id":"d","label":2})", 1);
  expect_parse_error(R"({"question_id":"q","doc_id":"d","label":1,"answer_spans":[]})", 1);
  expect_parse_error(R"({"question_id":"q","doc_id":"d","label":1,"answer_spans":[{"start":4,"end":4}]})", 1);
  expect_parse_error(
      R"({"question_id":"q","doc_id":"d","label":1,"answer_spans":[{"start":0,"end":5},{"start":3,"end":8}]})", 1);
  expect_parse_error(ok + "\n\n" + ok, 3);
}

TEST(AnnotationFile, ValidateAgainstCorpus) {
  Corpus corpus;
  corpus.add_document(ingest_document("d", "", "Short text."));
  corpus.add_question(make_question("q", "What?", std::nullopt));
  EXPECT_NO_THROW(validate_annotations(std::vector<GroundTruthAnnotation>{{"q", "d", 1, {{0, 5}}}}, corpus));
  EXPECT_THROW(validate_annotations(std::vector<GroundTruthAnnotation>{{"q", "d", 1, {{0, 50}}}}, corpus),
               AnnotationOutOfBounds);
  EXPECT_THROW(validate_annotations(std::vector<GroundTruthAnnotation>{{"x", "d", 0, {}}}, corpus), DataError);
  EXPECT_THROW(validate_annotations(std::vector<GroundTruthAnnotation>{{"q", "x", 0, {}}}, corpus), DataError);
}

}  // namespace
}  // namespace condense
