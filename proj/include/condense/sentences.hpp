#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace condense {

/// Rule-based sentence boundary detector for legal-style prose.
///
/// A boundary follows a terminal mark (. ! ? ;) plus any closing quotes or brackets, when the
/// next non-space character is an uppercase letter or a digit. A period does not end a sentence
/// when the word it terminates is a known abbreviation ("Art.", "No.", "e.g.") or a single letter.
class SentenceSplitter {
 public:
  SentenceSplitter();
  explicit SentenceSplitter(std::unordered_set<std::string> abbreviations);

  static const SentenceSplitter& standard();
  static std::span<const std::string_view> default_abbreviations();

  /// Offsets one past each sentence-ending mark, ascending. Text end is not included.
  std::vector<std::size_t> boundaries(std::u32string_view text) const;

  bool is_abbreviation(std::u32string_view word_with_period) const;

 private:
  std::unordered_set<std::string> abbreviations_;  // casefolded, including the final period
};

}  // namespace condense
