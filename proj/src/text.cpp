#include "clerc/text.hpp"

namespace clerc {

std::vector<WordSpan> tokenize_words(std::string_view text) {
  std::vector<WordSpan> words;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i == n) break;
    const std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    words.push_back({start, i});
  }
  return words;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = to_lower(c);
  return out;
}

std::size_t utf8_punctuation_length(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return 0;
  const auto byte = [&](std::size_t i) {
    return i < text.size() ? static_cast<unsigned char>(text[i]) : 0u;
  };
  const unsigned b0 = byte(pos);
  // U+2010..U+205E: dashes, curly quotes, ellipsis, primes.
  if (b0 == 0xE2 && byte(pos + 1) == 0x80 && byte(pos + 2) >= 0x80 &&
      byte(pos + 2) <= 0xBF) {
    return 3;
  }
  if (b0 == 0xE2 && byte(pos + 1) == 0x81 && byte(pos + 2) >= 0x80 &&
      byte(pos + 2) <= 0x9E) {
    return 3;
  }
  // U+00A7 section sign, U+00B6 pilcrow, U+00AB/U+00BB guillemets.
  if (b0 == 0xC2) {
    const unsigned b1 = byte(pos + 1);
    if (b1 == 0xA7 || b1 == 0xB6 || b1 == 0xAB || b1 == 0xBB) return 2;
  }
  return 0;
}

std::vector<std::string> normalized_words(std::string_view text) {
  std::vector<std::string> out;
  for (const WordSpan& w : tokenize_words(text)) {
    std::string word;
    word.reserve(w.size());
    std::size_t i = w.start;
    while (i < w.end) {
      if (const std::size_t p = utf8_punctuation_length(text, i); p > 0) {
        i += p;
        continue;
      }
      const char c = text[i];
      const auto u = static_cast<unsigned char>(c);
      if (is_alnum(c) || u >= 0x80) word.push_back(to_lower(c));
      ++i;
    }
    if (!word.empty()) out.push_back(std::move(word));
  }
  return out;
}

std::string squeeze_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const WordSpan& w : tokenize_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(w.start, w.size()));
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

}  // namespace clerc
