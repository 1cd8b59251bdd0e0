#include "condense/error.hpp"
#include "condense/retrieve.hpp"

#include "support/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace condense {
namespace {

SparseVector sparse(std::vector<std::pair<std::uint32_t, double>> entries) {
  SparseVector v;
  double sq = 0.0;
  for (const auto& [i, w] : entries) sq += w * w;
  v.entries = std::move(entries);
  v.norm = std::sqrt(sq);
  return v;
}

std::vector<Segment> plain_segments(std::size_t n) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"d", i, i * 10, i * 10 + 5, 1, 0});
  return out;
}

/// Scores are read off a fixed table keyed by segment text.
class TableEngine final : public ScoringEngine {
 public:
  explicit TableEngine(std::map<std::string, double> table) : table_(std::move(table)) {}
  std::string name() const override { return "table"; }
  ScoreMatrix score(std::span<const std::string> queries, std::span<const std::string> texts) override {
    ScoreMatrix m(queries.size());
    for (auto& row : m) {
      for (const auto& t : texts) {
        auto it = table_.find(t);
        row.push_back(it == table_.end() ? std::nullopt : std::optional<double>(it->second));
      }
    }
    return m;
  }

 private:
  std::map<std::string, double> table_;
};

TEST(Cosine, Examples) {
  const SparseVector v = sparse({{0, 1.0}, {3, 2.0}});
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity(sparse({{0, 1.0}}), sparse({{1, 1.0}})), 0.0);
  EXPECT_NEAR(cosine_similarity(sparse({{0, 1}, {1, 2}, {2, 3}}), sparse({{0, 4}, {1, 5}, {2, 6}})),
              32.0 / std::sqrt(1078.0), 1e-12);
  EXPECT_NEAR(32.0 / std::sqrt(1078.0), 0.97463, 1e-5);
  const DenseVector a{{1, 2, 3}};
  const DenseVector b{{4, 5, 6}};
  EXPECT_NEAR(cosine_similarity(a, b), 32.0 / std::sqrt(1078.0), 1e-12);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine_similarity(SparseVector{}, sparse({{0, 1.0}})), ZeroVector);
  EXPECT_THROW(cosine_similarity(DenseVector{{0, 0}}, DenseVector{{1, 0}}), ZeroVector);
  EXPECT_THROW(cosine_similarity(DenseVector{{1, 0}}, DenseVector{{1, 0, 0}}), DimensionMismatch);
}

TEST(Cosine, SymmetricScaleInvariantAndBounded) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    DenseVector q;
    DenseVector p;
    for (int i = 0; i < 16; ++i) {
      q.values.push_back(normal(rng));
      p.values.push_back(normal(rng));
    }
    const double c = cosine_similarity(q, p);
    EXPECT_LE(std::abs(c), 1.0);
    EXPECT_NEAR(c, cosine_similarity(p, q), 1e-12);
    DenseVector scaled = q;
    for (double& x : scaled.values) x *= 3.5;
    EXPECT_NEAR(c, cosine_similarity(scaled, p), 1e-12);
  }
}

TEST(RankScores, KLargerThanPool) {
  const auto segments = plain_segments(3);
  const std::vector<std::optional<double>> scores{0.1, 0.9, 0.5};
  const RetrievalResult r = rank_scores("q", "d", "e", scores, segments, 5);
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0].segment_index, 1u);
  EXPECT_EQ(r.ranked[1].segment_index, 2u);
  EXPECT_EQ(r.ranked[2].segment_index, 0u);
  EXPECT_EQ(r.k_used, 5u);
}

TEST(RankScores, TiesGoToLowerIndex) {
  const auto segments = plain_segments(4);
  const std::vector<std::optional<double>> scores{0.2, 0.7, 0.7, 0.7};
  const RetrievalResult r = rank_scores("q", "d", "e", scores, segments, 2);
  ASSERT_EQ(r.ranked.size(), 2u);
  EXPECT_EQ(r.ranked[0].segment_index, 1u);
  EXPECT_EQ(r.ranked[1].segment_index, 2u);
}

TEST(RankScores, UndefinedScoresAreSkipped) {
  const auto segments = plain_segments(3);
  const std::vector<std::optional<double>> some{std::nullopt, 0.3, std::nullopt};
  EXPECT_EQ(rank_scores("q", "d", "e", some, segments, 5).ranked.size(), 1u);
  const std::vector<std::optional<double>> none(3);
  EXPECT_THROW(rank_scores("q", "d", "e", none, segments, 5), NoScorableSegments);
  EXPECT_THROW(rank_scores("q", "d", "e", some, segments, 0), ConfigError);
}

TEST(RankSegments, RareTermSegmentRanksFirstUnderTfidf) {
  const std::vector<std::string> paragraphs{
      "Customs duty on goods and services.", "Customs procedures for goods in transit.",
      "Services trade and customs cooperation.", "Phytosanitary inspection of customs goods."};
  const Document doc = ingest_document("d", "", testing::join_paragraphs(paragraphs));
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
    segments.push_back({"d", i, doc.paragraphs[i].start, doc.paragraphs[i].end, 0, 0});
  }
  const auto texts = segment_texts(doc, segments);
  TfidfEngine engine(fit_vocabulary(texts));
  const Question q = make_question("q1", "Which phytosanitary rules apply to customs goods?", std::nullopt);
  RetrievalConfig config;
  config.k = 4;
  const RetrievalResult r = rank_segments(q, doc, segments, config, engine);
  EXPECT_EQ(r.engine, "tfidf");
  ASSERT_FALSE(r.ranked.empty());
  EXPECT_EQ(r.ranked[0].segment_index, 3u);
}

// Reference ranking: score every segment by the textbook dot product of raw weights, then sort.
TEST(RankSegments, MatchesBruteForceRanking) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const Document doc = ingest_document("d", "", testing::random_text(rng, 12, 4));
    const auto segments = segment_document(doc, SegmenterConfig{30, 60, 0.1, BoundaryPolicy::kSentenceEnd});
    const auto texts = segment_texts(doc, segments);
    const Vocabulary vocab = fit_vocabulary(texts);
    TfidfEngine engine(vocab);
    const Question q = make_question("q", "Which tariff quota applies to goods of origin?", std::nullopt);

    std::vector<std::pair<double, std::size_t>> expected;
    auto weights = [&](const std::string& text) {
      std::map<std::string, double> w;
      for (const auto& t : tokenize(text)) {
        if (vocab.doc_freq(t) > 0) w[t] += 1.0;
      }
      for (auto& [t, x] : w) {
        x *= std::log((1.0 + static_cast<double>(vocab.num_docs())) / (1.0 + static_cast<double>(vocab.doc_freq(t)))) + 1.0;
      }
      return w;
    };
    const auto qw = weights(q.text);
    double qn = 0.0;
    for (const auto& [t, x] : qw) qn += x * x;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto sw = weights(texts[i]);
      double dot = 0.0;
      double sn = 0.0;
      for (const auto& [t, x] : sw) {
        sn += x * x;
        if (auto it = qw.find(t); it != qw.end()) dot += x * it->second;
      }
      if (sn > 0.0) expected.emplace_back(dot / std::sqrt(qn * sn), i);
    }
    std::sort(expected.begin(), expected.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });

    RetrievalConfig config;
    config.k = 5;
    const RetrievalResult r = rank_segments(q, doc, segments, config, engine);
    ASSERT_EQ(r.ranked.size(), std::min<std::size_t>(5, expected.size()));
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      EXPECT_NEAR(r.ranked[i].score, expected[i].first, 1e-9);
      // Near-ties may legitimately swap under rounding; compare indices only for clear gaps.
      if (i + 1 < expected.size() && expected[i].first - expected[i + 1].first > 1e-9 &&
          (i == 0 || expected[i - 1].first - expected[i].first > 1e-9)) {
        EXPECT_EQ(r.ranked[i].segment_index, expected[i].second);
      }
    }
    // Top-k is a prefix of top-(k+5).
    config.k = 10;
    const RetrievalResult longer = rank_segments(q, doc, segments, config, engine);
    ASSERT_GE(longer.ranked.size(), r.ranked.size());
    EXPECT_TRUE(std::equal(r.ranked.begin(), r.ranked.end(), longer.ranked.begin()));
  }
}

TEST(MeanTopk, Examples) {
  RetrievalResult r;
  r.ranked = {{0, 0.4}};
  EXPECT_DOUBLE_EQ(mean_topk_score(r), 0.4);
  r.ranked = {{0, 1.0}, {1, 0.5}};
  EXPECT_DOUBLE_EQ(mean_topk_score(r), 0.75);
  r.ranked.clear();
  EXPECT_THROW(mean_topk_score(r), std::invalid_argument);
}

TEST(SweepK, DescendingScoresPickSmallestCandidate) {
  RetrievalResult r;
  for (std::size_t i = 0; i < 20; ++i) r.ranked.push_back({i, 1.0 - 0.01 * static_cast<double>(i)});
  const std::vector<std::size_t> ks{5, 10, 15};
  const KSweep sweep = sweep_k(r, ks);
  EXPECT_EQ(sweep.best_k, 5u);
  ASSERT_EQ(sweep.per_k.size(), 3u);
  EXPECT_GT(sweep.per_k[0].second, sweep.per_k[1].second);
  EXPECT_GT(sweep.per_k[1].second, sweep.per_k[2].second);
}

TEST(SweepK, EqualScoresTieToSmallest) {
  RetrievalResult r;
  for (std::size_t i = 0; i < 20; ++i) r.ranked.push_back({i, 0.5});
  const std::vector<std::size_t> ks{15, 5, 10};
  EXPECT_EQ(sweep_k(r, ks).best_k, 5u);
}

TEST(SweepK, OrderAndDuplicatesDoNotMatter) {
  RetrievalResult r;
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < 12; ++i) r.ranked.push_back({i, 1.0 / static_cast<double>(1 + rng() % 9)});
  std::sort(r.ranked.begin(), r.ranked.end(), [](auto& a, auto& b) { return a.score > b.score; });
  const std::vector<std::size_t> sorted{5, 10, 15};
  const std::vector<std::size_t> shuffled{15, 5, 10, 5};
  const KSweep a = sweep_k(r, sorted);
  const KSweep b = sweep_k(r, shuffled);
  EXPECT_EQ(a.best_k, b.best_k);
  EXPECT_EQ(a.per_k, b.per_k);
  const std::vector<std::size_t> single{7};
  EXPECT_EQ(sweep_k(r, single).best_k, 7u);
  EXPECT_THROW(sweep_k(r, std::vector<std::size_t>{}), ConfigError);
}

TEST(SweepK, FromEngine) {
  const Document doc = ingest_document("d", "", "Alpha beta.\n\nGamma delta.\n\nEpsilon zeta.");
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
    segments.push_back({"d", i, doc.paragraphs[i].start, doc.paragraphs[i].end, 2, 0});
  }
  TableEngine engine({{"Alpha beta.", 0.9}, {"Gamma delta.", 0.3}, {"Epsilon zeta.", 0.3}});
  const Question q = make_question("q", "anything", std::nullopt);
  const std::vector<std::size_t> ks{1, 2, 3};
  const KSweep sweep = sweep_k(q, doc, segments, engine, ks);
  EXPECT_EQ(sweep.best_k, 1u);
  EXPECT_NEAR(sweep.per_k[2].second, 0.5, 1e-12);
}

TEST(ResultsFile, RoundTripAtSixDecimals) {
  RetrievalResult r{"q1", "d1", "tfidf", {{2, 0.1234567}, {0, -0.0000001}}, 5};
  std::stringstream buffer;
  write_results(std::vector<RetrievalResult>{r}, buffer);
  EXPECT_NE(buffer.str().find("\"score\":0.123457"), std::string::npos);
  EXPECT_NE(buffer.str().find("\"score\":0.000000"), std::string::npos);
  const auto back = read_results(buffer);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].ranked[0].segment_index, 2u);
  EXPECT_NEAR(back[0].ranked[0].score, 0.123457, 1e-12);

  std::stringstream bad(R"({"question_id":"q","doc_id":"d","engine":"e","k_used":1,"ranked":[{"segment_index":0,"score":1},{"segment_index":1,"score":1}]})");
  EXPECT_THROW(read_results(bad), ParseError);
}

}  // namespace
}  // namespace condense
