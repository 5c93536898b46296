#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clerc {

/// Canonical identity of a reported case: "<volume> <reporter> <page>".
struct CitationKey {
  std::uint32_t volume = 0;
  std::string reporter;
  std::uint32_t page = 0;

  std::string to_string() const;
  auto operator<=>(const CitationKey&) const = default;
  bool operator==(const CitationKey&) const = default;
};

enum class CitationKind { case_citation, statute, short_form };

std::string_view to_string(CitationKind kind);

/// A recognized citation. Offsets are byte offsets into the scanned text and
/// `raw` is exactly text[start, end).
struct CitationSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  CitationKind kind = CitationKind::case_citation;
  std::string raw;
  /// Case citations always carry a key. "Id." carries the first key of the
  /// group of the preceding case citation in the same paragraph; supra and
  /// unresolvable short forms carry none. Statutes carry none.
  std::optional<CitationKey> key;
  std::optional<std::uint32_t> pincite;
  /// Keys of the parallel-citation group this span belongs to (for "Id.",
  /// the group of the citation it resolves to), in text order.
  std::vector<CitationKey> parallel_keys;
  /// Index of the parallel group among the case citations of the text;
  /// equal for spans of one case cited through several reporters.
  std::size_t group = 0;
};

/// Text between U+201C and U+201D, exclusive of the marks.
struct QuoteSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;
  std::optional<CitationSpan> paired_citation;
};

struct SentenceBounds {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const SentenceBounds&) const = default;
};

/// Maps surface reporter variants to canonical abbreviations. Matching
/// ignores spaces, so "F. 3d", "F.3d" and "F .3d" are the same variant.
class ReporterTable {
 public:
  ReporterTable() = default;

  /// U.S., S.Ct., L.Ed., L.Ed.2d, F., F.2d, F.3d, F. Supp., F. Supp. 2d,
  /// F.R.D.
  static ReporterTable defaults();

  /// {"version": 1, "reporters": {"<variant>": "<canonical>", ...}}
  static ReporterTable from_json(std::istream& in);

  void add(std::string_view variant, std::string_view canonical);
  std::optional<std::string> canonical(std::string_view surface) const;
  bool empty() const { return variants_.empty(); }
  std::size_t size() const { return variants_.size(); }

  struct Match {
    std::size_t end = 0;  // exclusive text offset after the variant
    std::string canonical;
  };

  /// All variants that match text starting at `pos`, longest first. A single
  /// space may separate any two characters of a variant.
  std::vector<Match> match_at(std::string_view text, std::size_t pos) const;

 private:
  std::map<std::string, std::string> variants_;  // despaced -> canonical
};

struct CitationParserOptions {
  /// Maximum distance in bytes between a quote and its paired citation.
  std::size_t quote_pairing_window = 300;
  /// Sentence-terminal suppression list; a period ending one of these words
  /// never ends a sentence.
  std::vector<std::string> abbreviations = default_abbreviations();

  static std::vector<std::string> default_abbreviations();
};

class CitationParser {
 public:
  explicit CitationParser(ReporterTable reporters = ReporterTable::defaults(),
                          CitationParserOptions options = {});

  /// Non-overlapping "<volume> <reporter> <page>" spans with an optional
  /// pincite and court/year parenthetical absorbed, ordered by start.
  std::vector<CitationSpan> find_case_citations(std::string_view text) const;

  /// "<title> U.S.C. § <section>" and "Fed. R. <Civ.|Crim.|App.|Evid.|
  /// Bankr.> P. <rule>" families.
  std::vector<CitationSpan> find_statute_citations(std::string_view text) const;

  /// Case, statute and short-form citations merged in text order, with
  /// parallel groups assigned and "Id." resolved.
  std::vector<CitationSpan> parse(std::string_view text) const;

  /// Bounds of the citation sentence containing `citation`, or nullopt when
  /// no terminal is found inside the enclosing paragraph. `spans` must be
  /// parse(text); the overload without it parses internally.
  std::optional<SentenceBounds> citation_sentence_bounds(
      std::string_view text, const CitationSpan& citation,
      const std::vector<CitationSpan>& spans) const;
  std::optional<SentenceBounds> citation_sentence_bounds(
      std::string_view text, const CitationSpan& citation) const;

  std::vector<QuoteSpan> extract_direct_quotes(
      std::string_view text, const std::vector<CitationSpan>& spans) const;
  std::vector<QuoteSpan> extract_direct_quotes(std::string_view text) const;

  /// Canonical key from a case citation's raw text: leading stray letters
  /// are skipped, reporter variants canonicalized, pincites dropped.
  std::optional<CitationKey> normalize_citation(const CitationSpan& span) const;
  std::optional<CitationKey> parse_key(std::string_view raw) const;

  const ReporterTable& reporters() const { return reporters_; }
  const CitationParserOptions& options() const { return options_; }

  /// True when the period at `dot` ends a known abbreviation, an initial, or
  /// a token with internal periods.
  bool is_abbreviation_period(std::string_view text, std::size_t dot) const;

 private:
  std::optional<CitationSpan> match_case_at(std::string_view text,
                                            std::size_t pos) const;
  bool is_case_citation_start(std::string_view text, std::size_t pos) const;
  std::vector<CitationSpan> find_short_forms(std::string_view text) const;

  ReporterTable reporters_;
  CitationParserOptions options_;
  std::vector<std::string> abbreviations_sorted_;
};

/// A labeled citation sentence for measuring extraction accuracy.
struct LabeledSentence {
  std::string text;
  std::size_t citation_start = 0;  // offset of the citation inside `text`
  SentenceBounds expected;
};

struct SentenceAccuracy {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t failures = 0;  // no bounds found
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }
};

SentenceAccuracy evaluate_sentence_extraction(
    const CitationParser& parser, const std::vector<LabeledSentence>& sample);

std::vector<LabeledSentence> read_labeled_sentences(std::istream& in);

}  // namespace clerc
