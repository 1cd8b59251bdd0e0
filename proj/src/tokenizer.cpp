#include "condense/tokenizer.hpp"

#include "condense/error.hpp"
#include "condense/unicode.hpp"

#include <fstream>

namespace condense {

namespace detail {
// Generated from data/stopwords.txt at configure time.
extern const std::string_view kDefaultStopwords[];
extern const std::size_t kDefaultStopwordCount;
}  // namespace detail

Tokenizer::Tokenizer() {
  for (std::string_view word : default_stopwords()) stopwords_.emplace(word);
}

Tokenizer::Tokenizer(std::unordered_set<std::string> stopwords) : stopwords_(std::move(stopwords)) {}

Tokenizer Tokenizer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open stop-word file '" + path.string() + "'");
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    std::u32string folded = unicode::to_u32(line.substr(first, last - first + 1));
    for (char32_t& c : folded) c = unicode::fold(c);
    words.insert(unicode::to_utf8(folded));
  }
  return Tokenizer(std::move(words));
}

const Tokenizer& Tokenizer::standard() {
  static const Tokenizer instance;
  return instance;
}

std::span<const std::string_view> Tokenizer::default_stopwords() {
  return {detail::kDefaultStopwords, detail::kDefaultStopwordCount};
}

template <typename Sink>
void Tokenizer::scan(std::u32string_view text, Sink&& sink) const {
  std::u32string term;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    if (term.size() >= 2) {
      std::string utf8 = unicode::to_utf8(term);
      if (!stopwords_.contains(utf8)) sink(start, end, std::move(utf8));
    }
    term.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (unicode::is_alnum(c)) {
      if (term.empty()) start = i;
      term.push_back(unicode::fold(c));
    } else if (!term.empty()) {
      emit(i);
    }
  }
  if (!term.empty()) emit(text.size());
}

std::vector<std::string> Tokenizer::tokenize(std::string_view utf8) const {
  std::vector<std::string> terms;
  scan(unicode::to_u32(utf8), [&](std::size_t, std::size_t, std::string term) {
    terms.push_back(std::move(term));
  });
  return terms;
}

std::vector<Token> Tokenizer::tokenize_spans(std::u32string_view text) const {
  std::vector<Token> tokens;
  scan(text, [&](std::size_t start, std::size_t end, std::string term) {
    tokens.push_back({start, end, std::move(term)});
  });
  return tokens;
}

std::size_t Tokenizer::count(std::string_view utf8) const { return count(unicode::to_u32(utf8)); }

std::size_t Tokenizer::count(std::u32string_view text) const {
  std::size_t n = 0;
  scan(text, [&](std::size_t, std::size_t, std::string) { ++n; });
  return n;
}

std::vector<std::string> tokenize(std::string_view utf8) { return Tokenizer::standard().tokenize(utf8); }

}  // namespace condense
