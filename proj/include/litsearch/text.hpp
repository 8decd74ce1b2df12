#pragma once

// Text analysis shared by tagging, indexing and ranking. All tokenizers work
// on UTF-8 bytes; any byte >= 0x80 is treated as part of a word.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace litsearch::text {

std::size_t char_count(std::string_view s);

// Maps between byte offsets and Unicode scalar offsets of one string.
class CharIndex {
 public:
  explicit CharIndex(std::string_view s);

  std::size_t size_chars() const { return starts_.size() - 1; }
  std::size_t char_to_byte(std::size_t char_pos) const;
  // Byte offsets inside a multibyte sequence map to the sequence's char.
  std::size_t byte_to_char(std::size_t byte_pos) const;

 private:
  std::vector<std::size_t> starts_;  // byte offset of each char + sentinel
};

std::string substr_chars(std::string_view s, std::size_t char_start, std::size_t char_len);

bool is_word_byte(unsigned char c);
bool is_valid_utf8(std::string_view s);

// Lowercase, fold Latin-1 accents to ASCII, map every other non-word char to a
// single space, trim. "SARS-CoV-2 infection" -> "sars cov 2 infection".
std::string fold_term(std::string_view s);

// Same folding restricted to one word (no separators survive).
std::string fold_word(std::string_view s);

struct Span {
  std::size_t begin = 0;  // bytes
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// Maximal runs of word bytes. Used for keyword postings and trigger matching.
std::vector<Span> word_tokens(std::string_view s);

// Word runs joined by single hyphens ("SARS-CoV-2" is one term). Used for
// lexicon lookup.
std::vector<Span> term_tokens(std::string_view s);

// Sentence byte ranges. Splits after . ? ! followed by whitespace and an
// uppercase letter or digit, except after e.g. / i.e. / Fig. / vs.
std::vector<Span> split_sentences(std::string_view s);

bool is_stopword(std::string_view folded_word);

// Keyword analysis: folded, non-stopword word tokens. Positions are the
// ordinal of the token among all word tokens (stopwords keep their slot).
struct AnalyzedToken {
  std::string term;
  std::size_t position = 0;
  Span span;
};
std::vector<AnalyzedToken> analyze_keywords(std::string_view s, std::size_t first_position = 0);

}  // namespace litsearch::text
