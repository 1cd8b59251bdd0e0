#include "condense/groundtruth.hpp"

#include "condense/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace condense {

KeywordSet extract_keywords(const Question& question, const Vocabulary& vocab, std::size_t m,
                            const Tokenizer& tokenizer) {
  struct Candidate {
    std::string term;
    std::size_t first_position;
    std::size_t count;
    double weight = 0.0;
  };
  std::vector<Candidate> candidates;
  std::unordered_map<std::string, std::size_t> slot;
  const std::vector<std::string> tokens = tokenizer.tokenize(question.text);
  for (std::size_t position = 0; position < tokens.size(); ++position) {
    if (!vocab.index_of(tokens[position])) continue;
    auto [it, inserted] = slot.try_emplace(tokens[position], candidates.size());
    if (inserted) {
      candidates.push_back({tokens[position], position, 0});
    }
    ++candidates[it->second].count;
  }
  if (candidates.empty()) throw NoKeywords(question.question_id);
  for (Candidate& c : candidates) {
    c.weight = static_cast<double>(c.count) * vocab.idf(*vocab.index_of(c.term));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.weight > b.weight; });

  KeywordSet set;
  set.question_id = question.question_id;
  for (std::size_t i = 0; i < candidates.size() && i < m; ++i) {
    set.keywords.emplace_back(candidates[i].term, candidates[i].weight);
  }
  return set;
}

double keyword_coverage(std::string_view segment_text, const KeywordSet& keywords, const Tokenizer& tokenizer) {
  if (keywords.keywords.empty()) return 0.0;
  const std::vector<std::string> tokens = tokenizer.tokenize(segment_text);
  const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  std::size_t found = 0;
  for (const auto& [term, weight] : keywords.keywords) {
    if (present.contains(term)) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(keywords.keywords.size());
}

TopkHit answer_in_topk(const RetrievalResult& result, const GroundTruthAnnotation& annotation,
                       std::span<const Segment> segments, std::size_t doc_length) {
  for (const Span& span : annotation.answer_spans) {
    if (span.end > doc_length || span.start >= span.end) {
      throw AnnotationOutOfBounds("answer span [" + std::to_string(span.start) + ", " +
                                  std::to_string(span.end) + ") of question '" + annotation.question_id +
                                  "' does not fit document '" + annotation.doc_id + "' of length " +
                                  std::to_string(doc_length));
    }
  }
  for (std::size_t rank = 0; rank < result.ranked.size(); ++rank) {
    const std::size_t index = result.ranked[rank].segment_index;
    const auto it = std::find_if(segments.begin(), segments.end(),
                                 [index](const Segment& s) { return s.segment_index == index; });
    if (it == segments.end()) {
      throw DataError("ranked segment " + std::to_string(index) + " is not a segment of '" +
                      result.doc_id + "'");
    }
    for (const Span& span : annotation.answer_spans) {
      if (span.overlaps(it->span())) return {true, rank + 1};
    }
  }
  return {false, std::nullopt};
}

const SegmentIndex::Entry& SegmentIndex::at(const std::string& doc_id) const {
  const auto it = documents.find(doc_id);
  if (it == documents.end()) throw DataError("no segments for document '" + doc_id + "'");
  return it->second;
}

double recall_at_k(std::span<const RetrievalResult> results,
                   std::span<const GroundTruthAnnotation> annotations, const SegmentIndex& index) {
  std::map<std::pair<std::string, std::string>, const RetrievalResult*> by_pair;
  for (const RetrievalResult& r : results) by_pair.emplace(std::pair(r.question_id, r.doc_id), &r);

  std::size_t positives = 0;
  std::size_t hits = 0;
  for (const GroundTruthAnnotation& a : annotations) {
    if (a.label != 1) continue;
    ++positives;
    const auto it = by_pair.find({a.question_id, a.doc_id});
    if (it == by_pair.end()) throw MissingResult(a.question_id, a.doc_id);
    const auto& entry = index.at(a.doc_id);
    if (answer_in_topk(*it->second, a, entry.segments, entry.doc_length).hit) ++hits;
  }
  if (positives == 0) throw NoPositivePairs();
  return static_cast<double>(hits) / static_cast<double>(positives);
}

std::vector<GroundTruthAnnotation> read_annotations(std::istream& in) {
  using nlohmann::json;
  std::vector<GroundTruthAnnotation> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    GroundTruthAnnotation a;
    try {
      const json record = json::parse(text);
      a.question_id = record.at("question_id").get<std::string>();
      a.doc_id = record.at("doc_id").get<std::string>();
      a.label = record.at("label").get<int>();
      if (const auto it = record.find("answer_spans"); it != record.end()) {
        for (const json& span : *it) {
          a.answer_spans.push_back({span.at("start").get<std::size_t>(), span.at("end").get<std::size_t>()});
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("invalid annotation record: ") + e.what());
    }
    if (a.label != 0 && a.label != 1) throw ParseError(line, "label must be 0 or 1");
    if (a.label == 1 && a.answer_spans.empty()) throw ParseError(line, "label 1 requires answer_spans");
    if (a.label == 0 && !a.answer_spans.empty()) throw ParseError(line, "label 0 must not carry answer_spans");
    std::vector<Span> sorted = a.answer_spans;
    std::sort(sorted.begin(), sorted.end(), [](const Span& x, const Span& y) { return x.start < y.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i].start >= sorted[i].end) throw ParseError(line, "answer span is empty or reversed");
      if (i > 0 && sorted[i - 1].end > sorted[i].start) throw ParseError(line, "answer spans overlap");
    }
    if (!seen.emplace(a.question_id, a.doc_id).second) {
      throw ParseError(line, "duplicate annotation for question '" + a.question_id + "' and document '" +
                                 a.doc_id + "'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<GroundTruthAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open annotation file '" + path.string() + "'");
  return read_annotations(in);
}

void write_annotations(std::span<const GroundTruthAnnotation> annotations, std::ostream& out) {
  for (const GroundTruthAnnotation& a : annotations) {
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const Span& s : a.answer_spans) spans.push_back({{"start", s.start}, {"end", s.end}});
    nlohmann::ordered_json record = {
        {"question_id", a.question_id}, {"doc_id", a.doc_id}, {"label", a.label}, {"answer_spans", spans}};
    out << record.dump() << '\n';
  }
}

void validate_annotations(std::span<const GroundTruthAnnotation> annotations, const Corpus& corpus) {
  for (const GroundTruthAnnotation& a : annotations) {
    if (corpus.find_question(a.question_id) == nullptr) {
      throw DataError("annotation refers to unknown question '" + a.question_id + "'");
    }
    const Document* doc = corpus.find_document(a.doc_id);
    if (doc == nullptr) throw DataError("annotation refers to unknown document '" + a.doc_id + "'");
    for (const Span& s : a.answer_spans) {
      if (s.end > doc->length()) {
        throw AnnotationOutOfBounds("answer span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                                    ") exceeds document '" + a.doc_id + "' of length " +
                                    std::to_string(doc->length()));
      }
    }
  }
}

}  // namespace condense
