#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clerc {

/// Half-open byte range [start, end) of one whitespace-delimited word.
struct WordSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const WordSpan&) const = default;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

inline char to_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

/// Maximal runs of non-whitespace bytes, in order.
std::vector<WordSpan> tokenize_words(std::string_view text);

std::size_t count_words(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Length in bytes of a UTF-8 punctuation sequence starting at `pos`
/// (curly quotes, dashes, section and pilcrow signs), or 0.
std::size_t utf8_punctuation_length(std::string_view text, std::size_t pos);

/// Whitespace words, case-folded, with ASCII and UTF-8 punctuation removed.
/// Words that become empty are dropped. Shared by ROUGE and n-gram matching.
std::vector<std::string> normalized_words(std::string_view text);

/// Joins the words of `text` with single spaces.
std::string squeeze_whitespace(std::string_view text);

std::string trim(std::string_view text);

// UTF-8 encodings of the curly double quotation marks (U+201C, U+201D).
inline constexpr std::string_view kOpenQuote = "\xE2\x80\x9C";
inline constexpr std::string_view kCloseQuote = "\xE2\x80\x9D";

}  // namespace clerc
