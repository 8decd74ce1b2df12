#include "litsearch/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace litsearch::text {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

// U+00C0..U+00FF folded to ASCII lowercase; 0 keeps the original code point.
constexpr std::array<char, 64> kLatin1Fold = {
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    'd', 'n', 'o', 'o', 'o', 'o', 'o', 0,   'o', 'u', 'u', 'u', 'u', 'y', 0,   's',
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    'd', 'n', 'o', 'o', 'o', 'o', 'o', 0,   'o', 'u', 'u', 'u', 'u', 'y', 0,   'y'};

// Appends the folded form of the code point starting at s[i]; returns its
// byte length. Sets `word` to whether the code point is a word character.
std::size_t fold_code_point(std::string_view s, std::size_t i, std::string& out, bool& word) {
  const auto lead = static_cast<unsigned char>(s[i]);
  if (lead < 0x80) {
    word = std::isalnum(lead) != 0;
    if (word) out.push_back(static_cast<char>(std::tolower(lead)));
    return 1;
  }
  std::size_t len = std::min(sequence_length(lead), s.size() - i);
  word = true;
  if (len == 2 && (lead == 0xC3)) {
    const auto second = static_cast<unsigned char>(s[i + 1]);
    const unsigned cp = ((lead & 0x1Fu) << 6) | (second & 0x3Fu);
    if (cp >= 0xC0 && cp <= 0xFF && kLatin1Fold[cp - 0xC0] != 0) {
      out.push_back(kLatin1Fold[cp - 0xC0]);
      return len;
    }
    if (cp == 0xD7 || cp == 0xF7) {  // multiplication / division signs
      word = false;
      return len;
    }
  }
  out.append(s.substr(i, len));
  return len;
}

}  // namespace

std::size_t char_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return !is_continuation(static_cast<unsigned char>(c)); }));
}

CharIndex::CharIndex(std::string_view s) {
  starts_.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(s[i]))) starts_.push_back(i);
  }
  starts_.push_back(s.size());
}

std::size_t CharIndex::char_to_byte(std::size_t char_pos) const {
  return starts_[std::min(char_pos, starts_.size() - 1)];
}

std::size_t CharIndex::byte_to_char(std::size_t byte_pos) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), byte_pos);
  return static_cast<std::size_t>(it - starts_.begin()) - 1;
}

std::string substr_chars(std::string_view s, std::size_t char_start, std::size_t char_len) {
  CharIndex idx(s);
  const auto b = idx.char_to_byte(char_start);
  const auto e = idx.char_to_byte(char_start + char_len);
  return std::string(s.substr(b, e - b));
}

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

bool is_valid_utf8(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const auto lead = static_cast<unsigned char>(s[i]);
    const auto len = sequence_length(lead);
    if (lead >= 0x80 && len == 1) return false;
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if (!is_continuation(static_cast<unsigned char>(s[i + k]))) return false;
    }
    i += len;
  }
  return true;
}

std::string fold_term(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    bool word = false;
    std::string piece;
    i += fold_code_point(s, i, piece, word);
    if (!word) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out += piece;
  }
  return out;
}

std::string fold_word(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    bool word = false;
    std::string piece;
    i += fold_code_point(s, i, piece, word);
    if (word) out += piece;
  }
  return out;
}

std::vector<Span> word_tokens(std::string_view s) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    const auto begin = i;
    while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
    out.push_back({begin, i});
  }
  return out;
}

std::vector<Span> term_tokens(std::string_view s) {
  std::vector<Span> out;
  for (const auto& w : word_tokens(s)) {
    if (!out.empty() && out.back().end + 1 == w.begin && s[out.back().end] == '-') {
      out.back().end = w.end;
    } else {
      out.push_back(w);
    }
  }
  return out;
}

namespace {

bool ends_with_blocked_abbreviation(std::string_view s, std::size_t punct) {
  static constexpr std::array<std::string_view, 4> kBlock = {"e.g", "i.e", "Fig", "vs"};
  const auto head = s.substr(0, punct);
  for (auto abbr : kBlock) {
    if (head.size() < abbr.size()) continue;
    if (head.substr(head.size() - abbr.size()) != abbr) continue;
    const auto before = head.size() - abbr.size();
    if (before == 0 || !is_word_byte(static_cast<unsigned char>(head[before - 1]))) return true;
  }
  return false;
}

}  // namespace

std::vector<Span> split_sentences(std::string_view s) {
  std::vector<Span> out;
  std::size_t start = 0;
  auto skip_space = [&](std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
  };
  start = skip_space(0);
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '?' && c != '!') continue;
    const auto next = i + 1;
    if (next >= s.size() || !std::isspace(static_cast<unsigned char>(s[next]))) continue;
    const auto following = skip_space(next);
    if (following >= s.size()) continue;
    const auto f = static_cast<unsigned char>(s[following]);
    if (!std::isupper(f) && !std::isdigit(f)) continue;
    if (c == '.' && ends_with_blocked_abbreviation(s, i)) continue;
    out.push_back({start, next});
    start = following;
    i = following - 1;
  }
  auto end = s.size();
  while (end > start && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  if (end > start) out.push_back({start, end});
  return out;
}

bool is_stopword(std::string_view w) {
  static const std::unordered_set<std::string_view> kStop = {
      "a",    "an",   "and",  "are",  "as",    "at",    "be",   "been", "but",  "by",
      "for",  "from", "had",  "has",  "have",  "in",    "into", "is",   "it",   "its",
      "of",   "on",   "or",   "that", "the",   "their", "then", "there", "these", "they",
      "this", "to",   "was",  "were", "which", "while", "will", "with", "we",   "our"};
  return kStop.count(w) != 0;
}

std::vector<AnalyzedToken> analyze_keywords(std::string_view s, std::size_t first_position) {
  std::vector<AnalyzedToken> out;
  std::size_t pos = first_position;
  for (const auto& span : word_tokens(s)) {
    auto term = fold_word(s.substr(span.begin, span.end - span.begin));
    if (!term.empty() && !is_stopword(term)) out.push_back({std::move(term), pos, span});
    ++pos;
  }
  return out;
}

}  // namespace litsearch::text
