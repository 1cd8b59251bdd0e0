#pragma once

// Deterministic synthetic text for tests. Every generated word is a non-stop-word of length >= 2,
// so token counts are known by construction.

#include "condense/corpus.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace condense::testing {

/// "w<n>" words never collide with stop words.
inline std::string word(std::size_t n) { return "w" + std::to_string(n); }

/// One sentence of `tokens` words: capitalized first word, terminal period.
inline std::string sentence(std::size_t tokens, std::size_t& counter) {
  std::string out;
  for (std::size_t i = 0; i < tokens; ++i) {
    if (i > 0) out += ' ';
    std::string w = word(counter++);
    if (i == 0) w[0] = 'W';
    out += w;
  }
  return out + ".";
}

/// Paragraph of `tokens` words split into sentences of `per_sentence` words.
inline std::string paragraph(std::size_t tokens, std::size_t per_sentence, std::size_t& counter) {
  std::string out;
  while (tokens > 0) {
    const std::size_t n = std::min(tokens, per_sentence);
    if (!out.empty()) out += ' ';
    out += sentence(n, counter);
    tokens -= n;
  }
  return out;
}

inline std::string join_paragraphs(const std::vector<std::string>& paragraphs) {
  std::string out;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += paragraphs[i];
  }
  return out;
}

/// Document whose paragraphs have the given token counts, 10-word sentences.
inline Document document_with_paragraphs(const std::vector<std::size_t>& tokens, std::size_t per_sentence = 10) {
  std::size_t counter = 0;
  std::vector<std::string> paragraphs;
  for (std::size_t t : tokens) paragraphs.push_back(paragraph(t, per_sentence, counter));
  return ingest_document("fixture", "fixture", join_paragraphs(paragraphs));
}

/// Random legal-flavoured prose: mixed sentence lengths, stop words, abbreviations, numbers.
inline std::string random_text(std::mt19937_64& rng, std::size_t paragraphs, std::size_t max_sentences = 8) {
  static const std::vector<std::string> vocabulary = {
      "trade", "tariff", "quota", "party", "parties", "goods", "services", "investment", "dispute",
      "settlement", "origin", "customs", "procurement", "labour", "environment", "subsidy", "safeguard",
      "measure", "annex", "schedule", "import", "export", "duty", "provision", "chapter", "committee"};
  static const std::vector<std::string> fillers = {"the", "of", "and", "to", "shall", "in", "a", "such"};
  static const std::vector<std::string> extras = {"Art. 5", "No. 12", "e.g. textiles", "2021", "(b)", "i.e. any"};
  std::uniform_int_distribution<std::size_t> vocab_pick(0, vocabulary.size() - 1);
  std::uniform_int_distribution<std::size_t> filler_pick(0, fillers.size() - 1);
  std::uniform_int_distribution<std::size_t> extra_pick(0, extras.size() - 1);
  std::uniform_int_distribution<int> percent(0, 99);

  std::vector<std::string> out;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    std::string para;
    const std::size_t sentences = 1 + rng() % max_sentences;
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t words = 3 + rng() % 25;
      std::string sent;
      for (std::size_t w = 0; w < words; ++w) {
        std::string token;
        const int roll = percent(rng);
        if (roll < 55) token = vocabulary[vocab_pick(rng)];
        else if (roll < 90) token = fillers[filler_pick(rng)];
        else token = extras[extra_pick(rng)];
        if (w == 0) token[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
        if (!sent.empty()) sent += ' ';
        sent += token;
      }
      const int end = percent(rng);
      sent += end < 70 ? "." : end < 80 ? ";" : end < 90 ? "!" : "?";
      if (!para.empty()) para += ' ';
      para += sent;
    }
    out.push_back(para);
  }
  return join_paragraphs(out);
}

}  // namespace condense::testing
