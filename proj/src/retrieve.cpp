#include "condense/retrieve.hpp"

#include "condense/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace condense {

namespace {

double clamp_cosine(double value) { return std::clamp(value, -1.0, 1.0); }

}  // namespace

double cosine_similarity(const SparseVector& q, const SparseVector& p) {
  if (q.norm == 0.0 || p.norm == 0.0) throw ZeroVector();
  double dot = 0.0;
  auto a = q.entries.begin();
  auto b = p.entries.begin();
  while (a != q.entries.end() && b != p.entries.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      dot += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return clamp_cosine(dot / (q.norm * p.norm));
}

double cosine_similarity(const DenseVector& q, const DenseVector& p) {
  if (q.dimension() != p.dimension()) throw DimensionMismatch(q.dimension(), p.dimension());
  double dot = 0.0;
  double qq = 0.0;
  double pp = 0.0;
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    dot += q.values[i] * p.values[i];
    qq += q.values[i] * q.values[i];
    pp += p.values[i] * p.values[i];
  }
  if (qq == 0.0 || pp == 0.0) throw ZeroVector();
  return clamp_cosine(dot / (std::sqrt(qq) * std::sqrt(pp)));
}

TfidfEngine::TfidfEngine(Vocabulary vocab, const Tokenizer& tokenizer)
    : vocab_(std::move(vocab)), tokenizer_(&tokenizer) {}

namespace {

template <typename Vector>
ScoreMatrix score_all(const std::vector<Vector>& queries, const std::vector<Vector>& texts,
                      auto&& is_zero) {
  ScoreMatrix scores(queries.size(), std::vector<std::optional<double>>(texts.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (is_zero(queries[i])) continue;
    for (std::size_t j = 0; j < texts.size(); ++j) {
      if (!is_zero(texts[j])) scores[i][j] = cosine_similarity(queries[i], texts[j]);
    }
  }
  return scores;
}

}  // namespace

ScoreMatrix TfidfEngine::score(std::span<const std::string> queries, std::span<const std::string> texts) {
  auto encode = [&](std::span<const std::string> items) {
    std::vector<SparseVector> out;
    out.reserve(items.size());
    for (const std::string& item : items) out.push_back(tfidf_vector(item, vocab_, *tokenizer_));
    return out;
  };
  return score_all(encode(queries), encode(texts), [](const SparseVector& v) { return v.norm == 0.0; });
}

ScoreMatrix DenseEngine::score(std::span<const std::string> queries, std::span<const std::string> texts) {
  const std::vector<DenseVector> q = provider_->embed_batch(queries);
  const std::vector<DenseVector> t = provider_->embed_batch(texts);
  if (q.size() != queries.size() || t.size() != texts.size()) {
    throw ProviderError("embedding provider returned the wrong number of vectors");
  }
  return score_all(q, t, [](const DenseVector& v) { return v.norm() == 0.0; });
}

void RetrievalConfig::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
}

std::vector<std::string> segment_texts(const Document& doc, std::span<const Segment> segments) {
  std::vector<std::string> texts;
  texts.reserve(segments.size());
  for (const Segment& s : segments) texts.push_back(doc.utf8(s.span()));
  return texts;
}

RetrievalResult rank_scores(const std::string& question_id, const std::string& doc_id,
                            const std::string& engine, std::span<const std::optional<double>> scores,
                            std::span<const Segment> segments, std::size_t k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (scores.size() != segments.size()) throw std::invalid_argument("rank_scores: one score per segment expected");
  std::vector<RankedSegment> pool;
  pool.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) pool.push_back({segments[i].segment_index, *scores[i]});
  }
  if (pool.empty()) {
    throw NoScorableSegments("no segment of '" + doc_id + "' has a defined score for question '" +
                             question_id + "'");
  }
  auto better = [](const RankedSegment& a, const RankedSegment& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.segment_index < b.segment_index;
  };
  const std::size_t keep = std::min(k, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), better);
  pool.resize(keep);

  RetrievalResult result;
  result.question_id = question_id;
  result.doc_id = doc_id;
  result.engine = engine;
  result.ranked = std::move(pool);
  result.k_used = k;
  return result;
}

RetrievalResult rank_segments(const Question& question, const Document& doc,
                              std::span<const Segment> segments, const RetrievalConfig& config,
                              ScoringEngine& engine) {
  config.validate();
  if (segments.empty()) throw NoScorableSegments("document '" + doc.doc_id + "' has no segments");
  const std::vector<std::string> query{question.query_text(config.query_with_explanation)};
  const std::vector<std::string> texts = segment_texts(doc, segments);
  const ScoreMatrix scores = engine.score(query, texts);
  return rank_scores(question.question_id, doc.doc_id, engine.name(), scores.front(), segments, config.k);
}

double mean_topk_score(const RetrievalResult& result) {
  if (result.ranked.empty()) throw std::invalid_argument("mean_topk_score: empty ranking");
  double sum = 0.0;
  for (const RankedSegment& r : result.ranked) sum += r.score;
  return sum / static_cast<double>(result.ranked.size());
}

RetrievalResult truncate(const RetrievalResult& result, std::size_t k) {
  RetrievalResult out = result;
  if (out.ranked.size() > k) out.ranked.resize(k);
  out.k_used = k;
  return out;
}

KSweep sweep_k(const RetrievalResult& full_ranking, std::span<const std::size_t> candidates) {
  if (candidates.empty()) throw ConfigError("k sweep needs at least one candidate");
  std::vector<std::size_t> ks(candidates.begin(), candidates.end());
  if (std::find(ks.begin(), ks.end(), std::size_t{0}) != ks.end()) {
    throw ConfigError("k candidates must be positive");
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  KSweep sweep;
  double best = 0.0;
  for (std::size_t k : ks) {
    const double score = mean_topk_score(truncate(full_ranking, k));
    sweep.per_k.emplace_back(k, score);
    if (sweep.best_k == 0 || score > best) {
      best = score;
      sweep.best_k = k;
    }
  }
  return sweep;
}

KSweep sweep_k(const Question& question, const Document& doc, std::span<const Segment> segments,
               ScoringEngine& engine, std::span<const std::size_t> candidates, bool query_with_explanation) {
  if (candidates.empty()) throw ConfigError("k sweep needs at least one candidate");
  RetrievalConfig config;
  config.k = *std::max_element(candidates.begin(), candidates.end());
  config.query_with_explanation = query_with_explanation;
  return sweep_k(rank_segments(question, doc, segments, config, engine), candidates);
}

void write_results(std::span<const RetrievalResult> results, std::ostream& out) {
  using nlohmann::json;
  for (const RetrievalResult& r : results) {
    std::string line = fmt::format(R"({{"question_id":{},"doc_id":{},"engine":{},"k_used":{},"ranked":[)",
                                   json(r.question_id).dump(), json(r.doc_id).dump(),
                                   json(r.engine).dump(), r.k_used);
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      if (i > 0) line.push_back(',');
      // rounding first keeps tiny negatives from printing as "-0.000000"
      const double score = std::round(r.ranked[i].score * 1e6) / 1e6 + 0.0;
      line += fmt::format(R"({{"segment_index":{},"score":{:.6f}}})", r.ranked[i].segment_index, score);
    }
    line += "]}\n";
    out << line;
  }
}

std::vector<RetrievalResult> read_results(std::istream& in) {
  using nlohmann::json;
  std::vector<RetrievalResult> results;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(text);
      RetrievalResult r;
      r.question_id = record.at("question_id").get<std::string>();
      r.doc_id = record.at("doc_id").get<std::string>();
      r.engine = record.at("engine").get<std::string>();
      r.k_used = record.at("k_used").get<std::size_t>();
      for (const json& entry : record.at("ranked")) {
        r.ranked.push_back({entry.at("segment_index").get<std::size_t>(), entry.at("score").get<double>()});
      }
      if (r.k_used == 0) throw ParseError(line, "k_used must be positive");
      if (r.ranked.size() > r.k_used) throw ParseError(line, "ranked has more entries than k_used");
      results.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("invalid retrieval record: ") + e.what());
    }
  }
  return results;
}

}  // namespace condense
