#include "condense/sentences.hpp"

#include "condense/unicode.hpp"

#include <array>

namespace condense {

namespace {

constexpr std::array<std::string_view, 30> kAbbreviations = {
    "art.",  "arts.", "no.",  "nos.", "e.g.", "i.e.", "etc.", "cf.",  "vs.",  "viz.",
    "para.", "paras.", "sec.", "ch.",  "p.",   "pp.",  "vol.", "ed.",  "mr.",  "mrs.",
    "ms.",   "dr.",   "prof.", "inc.", "ltd.", "co.",  "corp.", "st.", "u.s.", "approx.",
};

bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U';'; }

bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'”' || c == U'’' || c == U'»';
}

}  // namespace

SentenceSplitter::SentenceSplitter() {
  for (std::string_view a : kAbbreviations) abbreviations_.emplace(a);
}

SentenceSplitter::SentenceSplitter(std::unordered_set<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

const SentenceSplitter& SentenceSplitter::standard() {
  static const SentenceSplitter instance;
  return instance;
}

std::span<const std::string_view> SentenceSplitter::default_abbreviations() { return kAbbreviations; }

bool SentenceSplitter::is_abbreviation(std::u32string_view word) const {
  std::u32string folded(word);
  for (char32_t& c : folded) c = unicode::fold(c);
  return abbreviations_.contains(unicode::to_utf8(folded));
}

std::vector<std::size_t> SentenceSplitter::boundaries(std::u32string_view text) const {
  std::vector<std::size_t> out;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t end = i + 1;
    while (end < n && (is_closer(text[end]) || is_terminal(text[end]))) ++end;
    if (end >= n || !unicode::is_space(text[end])) continue;
    std::size_t next = end;
    while (next < n && unicode::is_space(text[next])) ++next;
    if (next >= n) continue;
    if (!unicode::is_upper(text[next]) && !unicode::is_digit(text[next])) continue;

    if (text[i] == U'.') {
      std::size_t word_start = i;
      while (word_start > 0 && !unicode::is_space(text[word_start - 1]) && text[word_start - 1] != U'(') {
        --word_start;
      }
      const std::u32string_view word = text.substr(word_start, i + 1 - word_start);
      if (word.size() == 2 && unicode::is_alnum(word[0]) && !unicode::is_digit(word[0])) continue;
      if (is_abbreviation(word)) continue;
    }
    out.push_back(end);
    i = end - 1;
  }
  return out;
}

}  // namespace condense
