#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace condense {

/// Tag for the text normalization rules; bump when normalize_text changes.
inline constexpr std::string_view kNormalizationVersion = "nfc-lf-ws/1";

/// Half-open [start, end) range of code-point offsets.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool overlaps(const Span& other) const noexcept {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

/// A normalized long text. Offsets index code points of `text`, never bytes.
struct Document {
  std::string doc_id;
  std::string title;
  std::u32string text;
  std::vector<Span> paragraphs;

  std::size_t length() const noexcept { return text.size(); }
  std::u32string_view slice(Span span) const {
    return std::u32string_view(text).substr(span.start, span.end - span.start);
  }
  std::string utf8() const;
  std::string utf8(Span span) const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Question {
  std::string question_id;
  std::string text;
  std::optional<std::string> explanation;

  /// Text used to build the query vector: the question, optionally followed by its explanation.
  std::string query_text(bool with_explanation = true) const;

  friend bool operator==(const Question&, const Question&) = default;
};

/// NFC, LF line endings, single spaces, stripped lines, paragraph breaks reduced to one blank line.
std::string normalize_text(std::string_view raw);

/// Paragraphs of already-normalized text: maximal runs separated by blank lines.
std::vector<Span> paragraph_spans(std::u32string_view normalized);

/// Throws EmptyDocument when nothing survives normalization.
Document ingest_document(std::string doc_id, std::string title, std::string_view raw);

/// Throws DataError when the normalized text is empty.
Question make_question(std::string question_id, std::string_view text,
                       std::optional<std::string> explanation = std::nullopt);

class Corpus {
 public:
  /// Throws DuplicateId.
  void add_document(Document document);
  void add_question(Question question);
  const Document& ingest(std::string doc_id, std::string title, std::string_view raw);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::vector<Question>& questions() const noexcept { return questions_; }
  const Document* find_document(std::string_view doc_id) const;
  const Question* find_question(std::string_view question_id) const;
  std::string_view normalization_version() const noexcept { return kNormalizationVersion; }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.documents_ == b.documents_ && a.questions_ == b.questions_;
  }

 private:
  std::vector<Document> documents_;
  std::vector<Question> questions_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, std::size_t> question_index_;
};

/// Line-delimited records, one JSON object per line. Blank lines are skipped.
Corpus read_corpus(std::istream& in);
void write_corpus(const Corpus& corpus, std::ostream& out);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace condense
