#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace condense {

/// One indexable term and the code-point range it was read from.
struct Token {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string term;
};

/// Word-level tokenizer: casefold, split on non-alphanumerics, drop terms shorter than two
/// code points and stop words. Immutable after construction, so it can be shared across threads.
class Tokenizer {
 public:
  /// Uses the built-in English stop-word list.
  Tokenizer();
  explicit Tokenizer(std::unordered_set<std::string> stopwords);

  /// One lowercase term per line, UTF-8. Blank lines and lines starting with '#' are ignored.
  static Tokenizer from_file(const std::filesystem::path& path);
  static const Tokenizer& standard();
  static std::span<const std::string_view> default_stopwords();

  std::vector<std::string> tokenize(std::string_view utf8) const;
  std::vector<Token> tokenize_spans(std::u32string_view text) const;
  std::size_t count(std::string_view utf8) const;
  std::size_t count(std::u32string_view text) const;
  bool is_stopword(std::string_view term) const { return stopwords_.contains(std::string(term)); }
  std::size_t stopword_count() const noexcept { return stopwords_.size(); }

 private:
  template <typename Sink>
  void scan(std::u32string_view text, Sink&& sink) const;

  std::unordered_set<std::string> stopwords_;
};

/// Tokenizes with the standard tokenizer.
std::vector<std::string> tokenize(std::string_view utf8);

}  // namespace condense
