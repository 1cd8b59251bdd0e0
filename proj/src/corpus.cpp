#include "condense/corpus.hpp"

#include "condense/error.hpp"
#include "condense/unicode.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace condense {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::string Document::utf8() const { return unicode::to_utf8(text); }

std::string Document::utf8(Span span) const { return unicode::to_utf8(slice(span)); }

std::string Question::query_text(bool with_explanation) const {
  if (with_explanation && explanation && !explanation->empty()) {
    return text + " " + *explanation;
  }
  return text;
}

std::string normalize_text(std::string_view raw) {
  const std::u32string text = unicode::to_u32(unicode::nfc(raw));

  std::u32string out;
  out.reserve(text.size());
  std::u32string line;
  std::size_t pending_breaks = 0;  // line breaks seen since the last non-empty line
  bool pending_space = false;

  auto flush_line = [&] {
    if (!line.empty()) {
      if (!out.empty()) {
        out.append(pending_breaks >= 2 ? U"\n\n" : U"\n");
      }
      out.append(line);
      line.clear();
      pending_breaks = 0;
    }
    pending_space = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (unicode::is_line_break(c)) {
      if (c == U'\r' && i + 1 < text.size() && text[i + 1] == U'\n') ++i;
      flush_line();
      ++pending_breaks;
    } else if (unicode::is_horizontal_space(c)) {
      pending_space = !line.empty();
    } else {
      if (pending_space) line.push_back(U' ');
      pending_space = false;
      line.push_back(c);
    }
  }
  flush_line();
  return unicode::to_utf8(out);
}

std::vector<Span> paragraph_spans(std::u32string_view normalized) {
  std::vector<Span> spans;
  std::size_t start = 0;
  const std::size_t n = normalized.size();
  while (start < n) {
    while (start < n && normalized[start] == U'\n') ++start;
    if (start >= n) break;
    std::size_t end = start;
    while (end < n && !(normalized[end] == U'\n' && end + 1 < n && normalized[end + 1] == U'\n')) {
      ++end;
    }
    // Trailing single newline never occurs in normalized text, but keep spans non-empty regardless.
    std::size_t trimmed = end;
    while (trimmed > start && normalized[trimmed - 1] == U'\n') --trimmed;
    if (trimmed > start) spans.push_back({start, trimmed});
    start = end;
  }
  return spans;
}

Document ingest_document(std::string doc_id, std::string title, std::string_view raw) {
  if (doc_id.empty()) throw DataError("document id must not be empty");
  Document doc;
  doc.text = unicode::to_u32(normalize_text(raw));
  if (doc.text.empty()) throw EmptyDocument(doc_id);
  doc.paragraphs = paragraph_spans(doc.text);
  doc.doc_id = std::move(doc_id);
  doc.title = std::move(title);
  return doc;
}

Question make_question(std::string question_id, std::string_view text,
                       std::optional<std::string> explanation) {
  if (question_id.empty()) throw DataError("question id must not be empty");
  Question q;
  q.text = normalize_text(text);
  if (q.text.empty()) throw DataError("question '" + question_id + "' has empty text");
  if (explanation) {
    std::string normalized = normalize_text(*explanation);
    if (!normalized.empty()) q.explanation = std::move(normalized);
  }
  q.question_id = std::move(question_id);
  return q;
}

void Corpus::add_document(Document document) {
  if (doc_index_.contains(document.doc_id)) throw DuplicateId(document.doc_id);
  doc_index_.emplace(document.doc_id, documents_.size());
  documents_.push_back(std::move(document));
}

void Corpus::add_question(Question question) {
  if (question_index_.contains(question.question_id)) throw DuplicateId(question.question_id);
  question_index_.emplace(question.question_id, questions_.size());
  questions_.push_back(std::move(question));
}

const Document& Corpus::ingest(std::string doc_id, std::string title, std::string_view raw) {
  if (doc_index_.contains(doc_id)) throw DuplicateId(doc_id);
  add_document(ingest_document(std::move(doc_id), std::move(title), raw));
  return documents_.back();
}

const Document* Corpus::find_document(std::string_view doc_id) const {
  const auto it = doc_index_.find(std::string(doc_id));
  return it == doc_index_.end() ? nullptr : &documents_[it->second];
}

const Question* Corpus::find_question(std::string_view question_id) const {
  const auto it = question_index_.find(std::string(question_id));
  return it == question_index_.end() ? nullptr : &questions_[it->second];
}

namespace {

std::string required_string(const json& record, const char* key, std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line, "record is not an object");
    const std::string kind = required_string(record, "kind", line);
    if (kind == "doc") {
      std::string doc_id = required_string(record, "doc_id", line);
      std::string title = record.contains("title") && record["title"].is_string()
                              ? record["title"].get<std::string>()
                              : std::string();
      const std::string body = required_string(record, "text", line);
      if (corpus.find_document(doc_id) != nullptr) throw DuplicateId(doc_id);
      try {
        corpus.add_document(ingest_document(std::move(doc_id), std::move(title), body));
      } catch (const DuplicateId&) {
        throw;
      } catch (const DataError& e) {
        throw ParseError(line, e.what());
      }
    } else if (kind == "question") {
      std::string question_id = required_string(record, "question_id", line);
      const std::string body = required_string(record, "text", line);
      std::optional<std::string> explanation;
      if (const auto it = record.find("explanation"); it != record.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError(line, "field 'explanation' must be a string");
        explanation = it->get<std::string>();
      }
      if (corpus.find_question(question_id) != nullptr) throw DuplicateId(question_id);
      try {
        corpus.add_question(make_question(std::move(question_id), body, std::move(explanation)));
      } catch (const DuplicateId&) {
        throw;
      } catch (const DataError& e) {
        throw ParseError(line, e.what());
      }
    } else {
      throw ParseError(line, "unknown record kind '" + kind + "'");
    }
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const Document& doc : corpus.documents()) {
    ordered record = {{"kind", "doc"}, {"doc_id", doc.doc_id}, {"title", doc.title}, {"text", doc.utf8()}};
    out << record.dump() << '\n';
  }
  for (const Question& q : corpus.questions()) {
    ordered record = {{"kind", "question"}, {"question_id", q.question_id}, {"text", q.text}};
    if (q.explanation) record["explanation"] = *q.explanation;
    out << record.dump() << '\n';
  }
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file '" + path.string() + "'");
  return read_corpus(in);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write corpus file '" + path.string() + "'");
  write_corpus(corpus, out);
  if (!out) throw ConfigError("failed writing corpus file '" + path.string() + "'");
}

}  // namespace condense
