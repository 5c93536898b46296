#include "clerc/citation.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <limits>
#include <regex>

#include "clerc/errors.hpp"
#include "clerc/text.hpp"
#include "json.hpp"

namespace clerc {

namespace {

constexpr std::size_t kNoGroup = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kMaxNumberDigits = 6;

std::string despace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!is_space(c)) out.push_back(c);
  }
  return out;
}

bool starts_with_at(std::string_view text, std::size_t pos,
                    std::string_view prefix) {
  return pos <= text.size() && text.substr(pos).starts_with(prefix);
}

// Parses up to kMaxNumberDigits digits at `pos`; returns the end offset, or
// `pos` when there is no number there (or it is too long).
std::size_t scan_number(std::string_view text, std::size_t pos,
                        std::uint32_t* value) {
  std::size_t i = pos;
  std::uint64_t v = 0;
  while (i < text.size() && is_digit(text[i])) {
    v = v * 10 + static_cast<std::uint64_t>(text[i] - '0');
    ++i;
    if (i - pos > kMaxNumberDigits) return pos;
  }
  if (i == pos || v == 0) return pos;
  if (value) *value = static_cast<std::uint32_t>(v);
  return i;
}

std::size_t skip_spaces(std::string_view text, std::size_t pos,
                        std::size_t max_spaces = 2) {
  std::size_t i = pos;
  while (i < text.size() && text[i] == ' ' && i - pos < max_spaces) ++i;
  return i;
}

bool word_boundary_before(std::string_view text, std::size_t pos) {
  return pos == 0 || !is_alnum(text[pos - 1]);
}

// "–" (U+2013) and "—" (U+2014).
std::size_t dash_length(std::string_view text, std::size_t pos) {
  if (pos < text.size() && text[pos] == '-') return 1;
  if (starts_with_at(text, pos, "\xE2\x80\x93") ||
      starts_with_at(text, pos, "\xE2\x80\x94")) {
    return 3;
  }
  return 0;
}

// Page or page range at `pos` ("325", "9-10", "520-21"); returns end or pos.
std::size_t scan_page_range(std::string_view text, std::size_t pos,
                            std::uint32_t* first) {
  std::size_t e = scan_number(text, pos, first);
  if (e == pos) return pos;
  if (const std::size_t d = dash_length(text, e); d > 0) {
    const std::size_t e2 = scan_number(text, e + d, nullptr);
    if (e2 != e + d) e = e2;
  }
  if (e < text.size() && is_alnum(text[e])) return pos;
  return e;
}

// Court/year parenthetical such as "(1986)", "(9th Cir.1995)" or
// "(C.D. Cal. 1999)" starting at `pos`; returns end or pos.
std::size_t scan_court_year(std::string_view text, std::size_t pos) {
  std::size_t i = skip_spaces(text, pos, 1);
  if (i >= text.size() || text[i] != '(') return pos;
  const std::size_t limit = std::min(text.size(), i + 80);
  std::size_t close = i + 1;
  while (close < limit && text[close] != ')' && text[close] != '(' &&
         text[close] != '\n') {
    ++close;
  }
  if (close >= limit || text[close] != ')') return pos;
  std::size_t j = close;
  while (j > i + 1 && text[j - 1] == ' ') --j;
  if (j < i + 5) return pos;
  for (std::size_t k = j - 4; k < j; ++k) {
    if (!is_digit(text[k])) return pos;
  }
  if (j - 4 > i + 1 && is_digit(text[j - 5])) return pos;
  const int year = std::stoi(std::string(text.substr(j - 4, 4)));
  if (year < 1600 || year > 2099) return pos;
  return close + 1;
}

const std::array<std::string_view, 13> kSignals = {
    "See, e.g.,", "See also", "See generally", "But see", "But cf.",
    "See",        "Cf.",      "E.g.,",         "Accord",  "In re",
    "Compare",    "Contra",   "Id."};

const std::array<std::string_view, 16> kCaptionConnectors = {
    "of", "the", "and", "&", "for", "ex", "rel.", "de", "la",
    "in", "on", "re", "et", "al.", "to", "a"};

bool is_caption_word(std::string_view w) {
  if (w.empty()) return false;
  for (std::string_view c : kCaptionConnectors) {
    if (w == c) return true;
  }
  const char first = w.front();
  return is_upper(first) || is_digit(first);
}

}  // namespace

std::string CitationKey::to_string() const {
  return std::to_string(volume) + " " + reporter + " " + std::to_string(page);
}

std::string_view to_string(CitationKind kind) {
  switch (kind) {
    case CitationKind::case_citation:
      return "case";
    case CitationKind::statute:
      return "statute";
    case CitationKind::short_form:
      return "short-form";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ReporterTable

ReporterTable ReporterTable::defaults() {
  ReporterTable t;
  t.add("U.S.", "U.S.");
  t.add("S.Ct.", "S.Ct.");
  t.add("S.Ct", "S.Ct.");
  t.add("L.Ed.", "L.Ed.");
  t.add("L.Ed.2d", "L.Ed.2d");
  t.add("F.", "F.");
  t.add("F.2d", "F.2d");
  t.add("F.3d", "F.3d");
  t.add("F. Supp.", "F. Supp.");
  t.add("F. Supp. 2d", "F. Supp. 2d");
  t.add("F.R.D.", "F.R.D.");
  return t;
}

ReporterTable ReporterTable::from_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("reporter table: ") + e.what());
  }
  if (!j.is_object() || !j.contains("reporters") ||
      !j["reporters"].is_object()) {
    throw DataError("reporter table: expected an object with 'reporters'");
  }
  if (j.value("version", 1) != 1) {
    throw DataError("reporter table: unsupported version");
  }
  ReporterTable t;
  for (const auto& [variant, canonical] : j["reporters"].items()) {
    if (!canonical.is_string()) {
      throw DataError("reporter table: canonical form of '" + variant +
                      "' is not a string");
    }
    t.add(variant, canonical.get<std::string>());
  }
  if (t.empty()) throw DataError("reporter table: no reporters");
  return t;
}

void ReporterTable::add(std::string_view variant, std::string_view canonical) {
  std::string key = despace(variant);
  if (key.empty()) return;
  variants_[std::move(key)] = std::string(canonical);
}

std::optional<std::string> ReporterTable::canonical(
    std::string_view surface) const {
  auto it = variants_.find(despace(surface));
  if (it == variants_.end()) return std::nullopt;
  return it->second;
}

std::vector<ReporterTable::Match> ReporterTable::match_at(
    std::string_view text, std::size_t pos) const {
  std::vector<Match> matches;
  for (const auto& [variant, canonical] : variants_) {
    std::size_t t = pos;
    bool ok = true;
    for (std::size_t v = 0; v < variant.size(); ++v) {
      if (v > 0 && t < text.size() && text[t] == ' ') ++t;
      if (t >= text.size() || text[t] != variant[v]) {
        ok = false;
        break;
      }
      ++t;
    }
    if (ok) matches.push_back({t, canonical});
  }
  std::sort(matches.begin(), matches.end(),
            [](const Match& a, const Match& b) { return a.end > b.end; });
  return matches;
}

// ---------------------------------------------------------------------------
// CitationParser

std::vector<std::string> CitationParserOptions::default_abbreviations() {
  return {"v.",     "vs.",    "Corp.",  "Inc.",   "Co.",    "Cir.",
          "Supp.",  "No.",    "Nos.",   "U.S.",   "Ltd.",   "Ins.",
          "Am.",    "Id.",    "id.",    "Ibid.",  "e.g.",   "i.e.",
          "cf.",    "Cf.",    "Fed.",   "Civ.",   "Crim.",  "App.",
          "Evid.",  "Dist.",  "Ct.",    "Ass'n.", "Assn.",  "Bros.",
          "Dept.",  "Mr.",    "Mrs.",   "Ms.",    "Dr.",    "St.",
          "Jr.",    "Sr.",    "Mfg.",   "Gen.",   "Comm.",  "Admin.",
          "Auth.",  "Bd.",    "Educ.",  "Hosp.",  "Indus.", "Mut.",
          "Ry.",    "Sec.",   "Serv.",  "Sys.",   "Transp.", "Univ.",
          "Cnty.",  "Twp.",   "Prods.", "Elec.",  "Mgmt.",  "Assocs.",
          "Fin.",   "Cas.",   "Litig.", "Rev.",   "Stat.",  "Reg.",
          "Ann.",   "Const.", "amend.", "Pub.",   "al.",    "seq.",
          "art.",   "cl.",    "ch.",    "para.",  "pp.",    "p.",
          "n.",     "nn.",    "Cal.",   "Ill.",   "Tex.",   "Pa.",
          "Mass.",  "Mich.",  "Ariz.",  "Colo.",  "Fla.",   "Ga.",
          "Md.",    "Minn.",  "Mo.",    "Wis.",   "Wash.",  "Va.",
          "Conn.",  "Del.",   "Ky.",    "La.",    "Miss.",  "Neb.",
          "Nev.",   "Okla.",  "Tenn.",  "Ala.",   "Ark.",   "Kan.",
          "Ind.",   "Jan.",   "Feb.",   "Mar.",   "Apr.",   "Jun.",
          "Jul.",   "Aug.",   "Sep.",   "Sept.",  "Oct.",   "Nov.",
          "Dec.",   "Ed."};
}

CitationParser::CitationParser(ReporterTable reporters,
                               CitationParserOptions options)
    : reporters_(std::move(reporters)), options_(std::move(options)) {
  if (reporters_.empty()) {
    throw std::invalid_argument("citation parser needs a non-empty reporter table");
  }
  abbreviations_sorted_ = options_.abbreviations;
  std::sort(abbreviations_sorted_.begin(), abbreviations_sorted_.end());
}

namespace {

struct CoreMatch {
  std::uint32_t volume = 0;
  std::string reporter;
  std::uint32_t page = 0;
  std::size_t end = 0;
};

// "<volume> <reporter> <page>" with `pos` at the first volume digit.
std::optional<CoreMatch> match_core(const ReporterTable& reporters,
                                    std::string_view text, std::size_t pos) {
  CoreMatch m;
  const std::size_t vol_end = scan_number(text, pos, &m.volume);
  if (vol_end == pos || vol_end >= text.size() || text[vol_end] != ' ') {
    return std::nullopt;
  }
  const std::size_t rep_start = skip_spaces(text, vol_end);
  if (rep_start >= text.size() || !is_alpha(text[rep_start])) return std::nullopt;
  for (ReporterTable::Match& r : reporters.match_at(text, rep_start)) {
    if (r.end >= text.size() || text[r.end] != ' ') continue;
    const std::size_t page_start = skip_spaces(text, r.end);
    const std::size_t page_end = scan_number(text, page_start, &m.page);
    if (page_end == page_start) continue;
    if (page_end < text.size() && is_alnum(text[page_end])) continue;
    m.reporter = std::move(r.canonical);
    m.end = page_end;
    return m;
  }
  return std::nullopt;
}

}  // namespace

bool CitationParser::is_case_citation_start(std::string_view text,
                                            std::size_t pos) const {
  return match_core(reporters_, text, pos).has_value();
}

std::optional<CitationSpan> CitationParser::match_case_at(
    std::string_view text, std::size_t pos) const {
  std::size_t vol = pos;
  if (is_alpha(text[pos])) {
    // A single stray letter glued to the volume ("P51 F.3d 1449").
    if (pos + 1 >= text.size() || !is_digit(text[pos + 1])) return std::nullopt;
    vol = pos + 1;
  }
  auto core = match_core(reporters_, text, vol);
  if (!core) return std::nullopt;

  CitationSpan span;
  span.start = pos;
  span.kind = CitationKind::case_citation;
  span.key = CitationKey{core->volume, core->reporter, core->page};

  std::size_t e = core->end;
  // Pincites: ", 322" or ", 9-10", unless the number starts another citation.
  while (e + 2 < text.size() && text[e] == ',' && text[e + 1] == ' ' &&
         is_digit(text[e + 2])) {
    if (is_case_citation_start(text, e + 2)) break;
    std::uint32_t pin = 0;
    const std::size_t pe = scan_page_range(text, e + 2, &pin);
    if (pe == e + 2) break;
    if (!span.pincite) span.pincite = pin;
    e = pe;
  }
  e = scan_court_year(text, e);
  span.end = e;
  span.raw = std::string(text.substr(span.start, span.end - span.start));
  return span;
}

std::vector<CitationSpan> CitationParser::find_case_citations(
    std::string_view text) const {
  std::vector<CitationSpan> spans;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    const bool digit_start = is_digit(c) && word_boundary_before(text, i);
    const bool stray_start = is_alpha(c) && word_boundary_before(text, i) &&
                             i + 1 < n && is_digit(text[i + 1]);
    if (digit_start || stray_start) {
      if (auto span = match_case_at(text, i)) {
        i = span->end;
        spans.push_back(std::move(*span));
        continue;
      }
    }
    if (is_digit(c)) {
      while (i < n && is_digit(text[i])) ++i;
    } else {
      ++i;
    }
  }
  return spans;
}

std::vector<CitationSpan> CitationParser::find_statute_citations(
    std::string_view text) const {
  static const std::regex kCode(
      std::string(R"(\b\d+\s?U\.\s?S\.\s?C\.(?:\s?A\.)?\s*(?:)") +
      "\xC2\xA7" + R"()+\s*\d+[A-Za-z0-9\-]*(?:\([A-Za-z0-9]+\))*)");
  static const std::regex kRules(
      R"(\bFed\.\s?R\.\s?(?:Civ\.|Crim\.|App\.|Evid\.|Bankr\.)\s?(?:P\.\s?)?\d+(?:\.\d+)?(?:\([A-Za-z0-9]+\))*)");
  std::vector<CitationSpan> spans;
  for (const std::regex* re : {&kCode, &kRules}) {
    auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), *re);
    for (auto it = begin; it != std::cregex_iterator(); ++it) {
      CitationSpan s;
      s.start = static_cast<std::size_t>(it->position(0));
      s.end = s.start + static_cast<std::size_t>(it->length(0));
      s.kind = CitationKind::statute;
      s.raw = it->str(0);
      s.group = kNoGroup;
      spans.push_back(std::move(s));
    }
  }
  std::sort(spans.begin(), spans.end(),
            [](const CitationSpan& a, const CitationSpan& b) {
              return a.start < b.start;
            });
  return spans;
}

std::vector<CitationSpan> CitationParser::find_short_forms(
    std::string_view text) const {
  std::vector<CitationSpan> spans;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!word_boundary_before(text, i)) continue;
    std::size_t e = i;
    if (starts_with_at(text, i, "Id.") || starts_with_at(text, i, "id.")) {
      e = i + 3;
    } else if (starts_with_at(text, i, "Ibid.") ||
               starts_with_at(text, i, "ibid.")) {
      e = i + 5;
    } else if (starts_with_at(text, i, "supra") &&
               (i + 5 >= n || !is_alnum(text[i + 5]))) {
      e = i + 5;
    } else {
      continue;
    }
    // Optional "at 325" / ", at 9-10".
    std::size_t j = e;
    if (j < n && text[j] == ',') ++j;
    std::optional<std::uint32_t> pincite;
    if (starts_with_at(text, j, " at ")) {
      std::uint32_t pin = 0;
      const std::size_t pe = scan_page_range(text, j + 4, &pin);
      if (pe != j + 4) {
        e = pe;
        pincite = pin;
      }
    }
    CitationSpan s;
    s.pincite = pincite;
    s.start = i;
    s.end = e;
    s.kind = CitationKind::short_form;
    s.raw = std::string(text.substr(i, e - i));
    s.group = kNoGroup;
    spans.push_back(std::move(s));
    i = e - 1;
  }
  return spans;
}

std::vector<CitationSpan> CitationParser::parse(std::string_view text) const {
  std::vector<CitationSpan> all = find_case_citations(text);
  for (auto& s : find_statute_citations(text)) all.push_back(std::move(s));
  for (auto& s : find_short_forms(text)) all.push_back(std::move(s));
  std::stable_sort(all.begin(), all.end(),
                   [](const CitationSpan& a, const CitationSpan& b) {
                     if (a.start != b.start) return a.start < b.start;
                     return a.end > b.end;
                   });
  std::vector<CitationSpan> merged;
  for (auto& s : all) {
    if (!merged.empty() && s.start < merged.back().end) continue;
    merged.push_back(std::move(s));
  }

  // Parallel groups: consecutive case citations separated only by commas
  // and spaces.
  std::size_t group = 0;
  bool have_group = false;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CitationSpan& s = merged[i];
    if (s.kind != CitationKind::case_citation) continue;
    bool joins = false;
    if (have_group && i > 0 &&
        merged[i - 1].kind == CitationKind::case_citation) {
      const std::string_view gap =
          text.substr(merged[i - 1].end, s.start - merged[i - 1].end);
      joins = !gap.empty() && gap.size() <= 3 &&
              gap.find_first_not_of(", ") == std::string_view::npos &&
              gap.find(',') != std::string_view::npos;
    }
    if (!joins && have_group) ++group;
    have_group = true;
    s.group = group;
  }
  // Collect group keys.
  std::vector<std::vector<CitationKey>> group_keys(have_group ? group + 1 : 0);
  for (const CitationSpan& s : merged) {
    if (s.kind == CitationKind::case_citation) group_keys[s.group].push_back(*s.key);
  }
  for (CitationSpan& s : merged) {
    if (s.kind == CitationKind::case_citation) s.parallel_keys = group_keys[s.group];
  }

  // "Id." resolves to the case of the immediately preceding case citation in
  // the same paragraph and carries that group's first key. A parallel cite
  // of the same case right after it ("Id. at 325, 106 S.Ct. 2548") joins
  // the group.
  const CitationSpan* last_case = nullptr;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CitationSpan& s = merged[i];
    if (s.kind == CitationKind::case_citation) {
      last_case = &s;
      continue;
    }
    if (s.kind != CitationKind::short_form) continue;
    const bool is_id = s.raw.starts_with("Id") || s.raw.starts_with("id") ||
                       s.raw.starts_with("Ibid") || s.raw.starts_with("ibid");
    if (!is_id || last_case == nullptr) continue;
    const std::string_view between =
        text.substr(last_case->end, s.start - last_case->end);
    if (between.find('\n') != std::string_view::npos) continue;
    s.key = last_case->parallel_keys.front();
    s.parallel_keys = last_case->parallel_keys;
    s.group = last_case->group;
    std::size_t prev_end = s.end;
    for (std::size_t j = i + 1; j < merged.size(); ++j) {
      CitationSpan& n = merged[j];
      if (n.kind != CitationKind::case_citation) break;
      const std::string_view gap = text.substr(prev_end, n.start - prev_end);
      const bool adjacent = !gap.empty() && gap.size() <= 3 &&
                            gap.find_first_not_of(", ") == std::string_view::npos &&
                            gap.find(',') != std::string_view::npos;
      if (!adjacent || std::find(s.parallel_keys.begin(), s.parallel_keys.end(),
                                 *n.key) == s.parallel_keys.end()) {
        break;
      }
      n.group = s.group;
      n.parallel_keys = s.parallel_keys;
      prev_end = n.end;
    }
  }
  return merged;
}

bool CitationParser::is_abbreviation_period(std::string_view text,
                                            std::size_t dot) const {
  if (dot >= text.size() || text[dot] != '.') return false;
  if (dot == 0 || !is_alpha(text[dot - 1])) return false;  // "1984)." or "56(c)."
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  // Strip leading brackets and quotes.
  while (b < dot) {
    const char c = text[b];
    if (c == '(' || c == '[' || c == '"' || c == '\'') {
      ++b;
    } else if (const std::size_t p = utf8_punctuation_length(text, b); p > 0) {
      b += p;
    } else {
      break;
    }
  }
  const std::string_view word = text.substr(b, dot + 1 - b);
  if (word.size() <= 1) return false;
  if (word.size() == 2 && is_alpha(word[0])) return true;  // initial
  if (word.substr(0, word.size() - 1).find('.') != std::string_view::npos) {
    return true;  // "U.S.C.", "J.R.D."
  }
  return std::binary_search(abbreviations_sorted_.begin(),
                            abbreviations_sorted_.end(), std::string(word));
}

namespace {

const CitationSpan* span_containing(const std::vector<CitationSpan>& spans,
                                    std::size_t pos) {
  auto it = std::upper_bound(
      spans.begin(), spans.end(), pos,
      [](std::size_t p, const CitationSpan& s) { return p < s.start; });
  if (it == spans.begin()) return nullptr;
  --it;
  return pos < it->end ? &*it : nullptr;
}

std::size_t next_non_space(std::string_view text, std::size_t pos,
                           std::size_t limit) {
  while (pos < limit && text[pos] == ' ') ++pos;
  return pos;
}

}  // namespace

std::optional<SentenceBounds> CitationParser::citation_sentence_bounds(
    std::string_view text, const CitationSpan& citation) const {
  return citation_sentence_bounds(text, citation, parse(text));
}

std::optional<SentenceBounds> CitationParser::citation_sentence_bounds(
    std::string_view text, const CitationSpan& citation,
    const std::vector<CitationSpan>& spans) const {
  if (citation.end > text.size() || citation.start >= citation.end) {
    return std::nullopt;
  }
  const std::size_t nl_before = text.rfind('\n', citation.start == 0 ? 0 : citation.start - 1);
  const std::size_t para_start =
      (nl_before == std::string_view::npos || nl_before >= citation.start)
          ? 0
          : nl_before + 1;
  const std::size_t nl_after = text.find('\n', citation.start);
  const std::size_t para_end =
      nl_after == std::string_view::npos ? text.size() : nl_after;

  // Extend over the run of parallel cites adjacent to the citation.
  std::size_t g_start = citation.start;
  std::size_t g_end = citation.end;
  if (citation.kind == CitationKind::case_citation) {
    auto adjacent = [&](std::size_t a_end, std::size_t b_start) {
      if (b_start < a_end || b_start - a_end > 3) return false;
      const std::string_view gap = text.substr(a_end, b_start - a_end);
      return gap.find_first_not_of(", ") == std::string_view::npos;
    };
    auto same_run = [&](const CitationSpan& s) {
      return s.kind == CitationKind::case_citation && s.group == citation.group &&
             s.start >= para_start && s.end <= para_end;
    };
    std::size_t idx = spans.size();
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (spans[i].start == citation.start) idx = i;
    }
    if (idx < spans.size()) {
      for (std::size_t i = idx; i > 0 && same_run(spans[i - 1]) &&
                                adjacent(spans[i - 1].end, g_start);
           --i) {
        g_start = spans[i - 1].start;
      }
      for (std::size_t i = idx + 1; i < spans.size() && same_run(spans[i]) &&
                                    adjacent(g_end, spans[i].start);
           ++i) {
        g_end = spans[i].end;
      }
    }
  }

  // End: first terminal at or after the citation group.
  std::optional<std::size_t> end;
  {
    int depth = 0;
    std::size_t i = g_end;
    while (i < para_end && !end) {
      if (const CitationSpan* s = span_containing(spans, i); s && s->start >= g_end) {
        i = s->end;
        continue;
      }
      const char c = text[i];
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (depth == 0) {
          end = i;  // the enclosing parenthetical closes
          break;
        }
        --depth;
        if (depth == 0) {
          const std::size_t nx = next_non_space(text, i + 1, para_end);
          if (nx >= para_end) {
            end = i + 1;
          } else {
            const char d = text[nx];
            if (d != '.' && d != ';' && d != ',' && d != '(' && d != ')') end = i + 1;
          }
        }
      } else if (depth == 0 && c == ';') {
        end = i + 1;
      } else if (depth == 0 && (c == '.' || c == '?' || c == '!')) {
        if (c == '.' && is_abbreviation_period(text, i)) {
          ++i;
          continue;
        }
        std::size_t after = i + 1;
        if (starts_with_at(text, after, kCloseQuote)) after += kCloseQuote.size();
        if (after >= para_end || text[after] == ' ') {
          const std::size_t nx = next_non_space(text, after, para_end);
          if (nx >= para_end || !(text[nx] >= 'a' && text[nx] <= 'z')) end = after;
        }
      }
      ++i;
    }
  }
  if (!end) return std::nullopt;

  // Start: the preceding terminal boundary, then the nearest sentence
  // starter between it and the citation.
  std::size_t boundary = para_start;
  {
    int depth = 0;
    std::size_t j = g_start;
    while (j > para_start) {
      --j;
      if (const CitationSpan* s = span_containing(spans, j); s) {
        j = s->start;
        continue;
      }
      const char c = text[j];
      if (c == ')') {
        ++depth;
      } else if (c == '(') {
        if (depth == 0) {
          boundary = j + 1;
          break;
        }
        --depth;
      } else if (depth == 0 && (c == '.' || c == '?' || c == '!' || c == ';')) {
        if (c == '.' && is_abbreviation_period(text, j)) continue;
        std::size_t after = j + 1;
        if (starts_with_at(text, after, kCloseQuote)) after += kCloseQuote.size();
        if (after < g_start && text[after] == ' ') {
          const std::size_t nx = next_non_space(text, after, g_start);
          if (c == ';' || !(text[nx] >= 'a' && text[nx] <= 'z')) {
            boundary = after;
            break;
          }
        }
      }
    }
  }
  std::size_t start = next_non_space(text, boundary, g_start);

  std::size_t best = start;
  auto consider = [&](std::size_t p) {
    if (p >= start && p <= g_start) best = std::max(best, p);
  };
  // Signals and short forms.
  for (std::size_t p = start; p < g_start; ++p) {
    if (!word_boundary_before(text, p) || !is_upper(text[p])) continue;
    for (std::string_view sig : kSignals) {
      if (starts_with_at(text, p, sig) &&
          (!is_alpha(sig.back()) || p + sig.size() >= text.size() ||
           !is_alnum(text[p + sig.size()]))) {
        consider(p);
        break;
      }
    }
  }
  if (citation.kind == CitationKind::short_form) consider(citation.start);
  // Party captions "X v. Y".
  std::size_t last_cite_end = start;
  for (const CitationSpan& s : spans) {
    if (s.end <= g_start && s.end > last_cite_end && s.start >= start) last_cite_end = s.end;
  }
  for (std::size_t p = std::max(start, last_cite_end); p + 4 <= g_start; ++p) {
    if (!starts_with_at(text, p, " v. ")) continue;
    // Walk caption words backwards from p.
    std::size_t caption = p;
    std::size_t k = p;
    while (k > start) {
      std::size_t we = k;
      while (we > start && text[we - 1] == ' ') --we;
      std::size_t wb = we;
      while (wb > start && text[wb - 1] != ' ') --wb;
      if (wb == we) break;
      const std::string_view word = text.substr(wb, we - wb);
      const char last = word.back();
      if (last == ',' || last == ';' || last == ':') break;
      bool quoted = false;
      for (std::size_t q = 0; q < word.size(); ++q) {
        if (word[q] == '"' || utf8_punctuation_length(word, q) > 0) quoted = true;
      }
      if (quoted || !is_caption_word(word)) break;
      caption = wb;
      k = wb;
    }
    // Drop leading connectors ("in Haines v. Kerner" -> "Haines").
    while (caption < p) {
      std::size_t we = caption;
      while (we < p && text[we] != ' ') ++we;
      const std::string_view word = text.substr(caption, we - caption);
      if (word.empty() || is_upper(word.front()) || is_digit(word.front())) break;
      caption = next_non_space(text, we, p);
    }
    if (caption < p) consider(caption);
  }
  // A signal directly before the chosen start belongs to the sentence.
  bool extended = true;
  while (extended) {
    extended = false;
    std::size_t q = best;
    while (q > start && text[q - 1] == ' ') --q;
    for (std::string_view sig : kSignals) {
      if (q >= start + sig.size() && text.substr(q - sig.size(), sig.size()) == sig &&
          word_boundary_before(text, q - sig.size()) && q < best) {
        best = q - sig.size();
        extended = true;
        break;
      }
    }
  }
  return SentenceBounds{best, *end};
}

std::vector<QuoteSpan> CitationParser::extract_direct_quotes(
    std::string_view text) const {
  return extract_direct_quotes(text, parse(text));
}

std::vector<QuoteSpan> CitationParser::extract_direct_quotes(
    std::string_view text, const std::vector<CitationSpan>& spans) const {
  std::vector<QuoteSpan> quotes;
  const std::size_t window = options_.quote_pairing_window;

  auto has_terminal = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      if (const CitationSpan* s = span_containing(spans, i); s) {
        i = s->end - 1;
        continue;
      }
      const char c = text[i];
      if (c == '\n') return true;
      if (c == '?' || c == '!' ||
          (c == '.' && !is_abbreviation_period(text, i))) {
        if (i + 1 >= text.size() || text[i + 1] == ' ') return true;
      }
    }
    return false;
  };

  std::size_t i = 0;
  while (true) {
    const std::size_t open = text.find(kOpenQuote, i);
    if (open == std::string_view::npos) break;
    const std::size_t body = open + kOpenQuote.size();
    const std::size_t close = text.find(kCloseQuote, body);
    if (close == std::string_view::npos) break;
    const std::size_t next_open = text.find(kOpenQuote, body);
    if (next_open != std::string_view::npos && next_open < close) {
      i = next_open;  // unmatched opener
      continue;
    }
    QuoteSpan q;
    q.start = body;
    q.end = close;
    q.text = std::string(text.substr(body, close - body));
    const std::size_t outer_end = close + kCloseQuote.size();

    const CitationSpan* following = nullptr;
    const CitationSpan* preceding = nullptr;
    for (const CitationSpan& s : spans) {
      if (s.kind == CitationKind::statute) continue;
      if (s.start >= outer_end) {
        if (!following) following = &s;
      } else if (s.end <= open) {
        preceding = &s;
      }
    }
    std::size_t follow_dist = std::numeric_limits<std::size_t>::max();
    std::size_t precede_dist = std::numeric_limits<std::size_t>::max();
    if (following) follow_dist = following->start - outer_end;
    if (preceding) precede_dist = open - preceding->end;
    const CitationSpan* chosen = nullptr;
    if (following && follow_dist <= window &&
        !has_terminal(outer_end, following->start)) {
      chosen = following;
    } else {
      const bool f_ok = following && follow_dist <= window;
      const bool p_ok = preceding && precede_dist <= window;
      if (f_ok && (!p_ok || follow_dist <= precede_dist)) {
        chosen = following;
      } else if (p_ok) {
        chosen = preceding;
      }
    }
    if (chosen) q.paired_citation = *chosen;
    quotes.push_back(std::move(q));
    i = outer_end;
  }
  return quotes;
}

std::optional<CitationKey> CitationParser::normalize_citation(
    const CitationSpan& span) const {
  if (span.kind != CitationKind::case_citation) return std::nullopt;
  return parse_key(span.raw);
}

std::optional<CitationKey> CitationParser::parse_key(std::string_view raw) const {
  std::size_t i = 0;
  while (i < raw.size() && !is_digit(raw[i])) {
    if (i >= 2) return std::nullopt;  // at most a stray letter or bracket
    ++i;
  }
  if (i >= raw.size()) return std::nullopt;
  auto core = match_core(reporters_, raw, i);
  if (!core) return std::nullopt;
  return CitationKey{core->volume, core->reporter, core->page};
}

SentenceAccuracy evaluate_sentence_extraction(
    const CitationParser& parser, const std::vector<LabeledSentence>& sample) {
  SentenceAccuracy acc;
  for (const LabeledSentence& item : sample) {
    ++acc.total;
    const auto spans = parser.parse(item.text);
    const CitationSpan* target = nullptr;
    for (const CitationSpan& s : spans) {
      if (s.kind == CitationKind::statute) continue;
      if (s.start <= item.citation_start && item.citation_start < s.end) {
        target = &s;
        break;
      }
    }
    if (!target) {
      ++acc.failures;
      continue;
    }
    const auto bounds = parser.citation_sentence_bounds(item.text, *target, spans);
    if (!bounds) {
      ++acc.failures;
      continue;
    }
    if (*bounds == item.expected) ++acc.correct;
  }
  return acc;
}

std::vector<LabeledSentence> read_labeled_sentences(std::istream& in) {
  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledSentence s;
      s.text = j.at("text").get<std::string>();
      s.citation_start = j.at("citation_start").get<std::size_t>();
      s.expected.start = j.at("start").get<std::size_t>();
      s.expected.end = j.at("end").get<std::size_t>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("labeled sentences line " + std::to_string(line_no) +
                      ": " + e.what());
    }
  }
  return out;
}

}  // namespace clerc
