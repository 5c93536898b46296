#include "clerc/query.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "clerc/errors.hpp"

namespace clerc {

namespace {

using json = nlohmann::json;

// Removes [start, end) ranges from `text`, optionally inserting `marker`.
std::string cut_spans(std::string_view text,
                      const std::vector<std::pair<std::size_t, std::size_t>>& cuts,
                      std::string_view marker) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  for (const auto& [s, e] : cuts) {
    if (s < pos) continue;
    out.append(text.substr(pos, s - pos));
    out.append(marker);
    pos = e;
  }
  out.append(text.substr(pos));
  return out;
}

// Collapses runs of spaces left behind by removed spans. Text must be
// newline-free at this point.
std::string collapse_spaces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == ' ' && !out.empty() && out.back() == ' ') continue;
    out.push_back(c);
  }
  return out;
}

std::string flatten_newlines(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::string rstrip(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && is_space(s[e - 1])) --e;
  return std::string(s.substr(0, e));
}

std::string lstrip(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  return std::string(s.substr(b));
}

std::string join_around(std::string_view left, std::string_view mid,
                        std::string_view right) {
  std::string l = rstrip(left);
  std::string r = lstrip(right);
  std::string out = l;
  if (!mid.empty()) {
    if (!out.empty()) out.push_back(' ');
    out.append(mid);
  }
  if (!r.empty()) {
    if (!out.empty()) out.push_back(' ');
    out.append(r);
  }
  return out;
}

bool contains_key(std::span<const CitationKey> keys, const CitationKey& k) {
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

std::vector<std::string> keys_to_strings(std::span<const CitationKey> keys) {
  std::vector<std::string> out;
  for (const auto& k : keys) out.push_back(k.to_string());
  return out;
}

}  // namespace

std::string_view to_string(QueryView view) {
  return view == QueryView::single_removed ? "single-removed" : "all-removed";
}

std::string_view to_string(QueryKind kind) {
  return kind == QueryKind::direct ? "direct" : "indirect";
}

QueryView query_view_from_string(std::string_view s) {
  if (s == "single-removed") return QueryView::single_removed;
  if (s == "all-removed") return QueryView::all_removed;
  throw std::invalid_argument("unknown query view: " + std::string(s));
}

QueryKind query_kind_from_string(std::string_view s) {
  if (s == "direct") return QueryKind::direct;
  if (s == "indirect") return QueryKind::indirect;
  throw std::invalid_argument("unknown query kind: " + std::string(s));
}

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::none: return "none";
    case SkipReason::not_a_case_citation: return "not_a_case_citation";
    case SkipReason::unresolvable_key: return "unresolvable_key";
    case SkipReason::sentence_bounds_failed: return "sentence_bounds_failed";
    case SkipReason::target_not_in_corpus: return "target_not_in_corpus";
  }
  return "unknown";
}

// ---- CorpusKeyIndex ----

CorpusKeyIndex CorpusKeyIndex::build(std::span<const CaseDocument> docs,
                                     const CitationParser& parser) {
  CorpusKeyIndex index;
  for (const CaseDocument& doc : docs) {
    auto key = parser.parse_key(doc.reporter_cite);
    if (!key) {
      index.unparsed_.push_back(doc.doc_id);
      continue;
    }
    index.add(*key, doc.doc_id);
  }
  return index;
}

void CorpusKeyIndex::add(const CitationKey& key, std::string doc_id) {
  auto [it, inserted] = keys_.emplace(key, doc_id);
  if (!inserted && it->second != doc_id) {
    conflicts_.push_back({key, it->second, std::move(doc_id)});
  }
}

std::optional<std::string> CorpusKeyIndex::resolve(const CitationKey& key) const {
  auto it = keys_.find(key);
  if (it == keys_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::pair<CitationKey, std::string>> CorpusKeyIndex::resolve_first(
    std::span<const CitationKey> keys) const {
  for (const auto& k : keys) {
    if (auto doc = resolve(k)) return std::make_pair(k, *doc);
  }
  return std::nullopt;
}

// ---- ConstructionReport ----

void ConstructionReport::record(SkipReason reason) {
  ++candidates;
  switch (reason) {
    case SkipReason::none: ++built; break;
    case SkipReason::not_a_case_citation:
    case SkipReason::unresolvable_key: ++unresolvable_keys; break;
    case SkipReason::sentence_bounds_failed: ++sentence_failures; break;
    case SkipReason::target_not_in_corpus: ++target_not_in_corpus; break;
  }
}

double ConstructionReport::sentence_failure_rate() const {
  const std::size_t resolved = built + sentence_failures;
  return resolved == 0 ? 0.0 : static_cast<double>(sentence_failures) / resolved;
}

ConstructionReport& ConstructionReport::operator+=(const ConstructionReport& o) {
  candidates += o.candidates;
  built += o.built;
  sentence_failures += o.sentence_failures;
  unresolvable_keys += o.unresolvable_keys;
  target_not_in_corpus += o.target_not_in_corpus;
  direct += o.direct;
  indirect += o.indirect;
  return *this;
}

// ---- QueryBuilder ----

QueryBuilder::QueryBuilder(const CitationParser& parser,
                           const CorpusKeyIndex& corpus)
    : parser_(parser), corpus_(corpus) {}

DocumentCitations QueryBuilder::analyze(const CaseDocument& doc) const {
  DocumentCitations out;
  out.spans = parser_.parse(doc.text);
  out.words = tokenize_words(doc.text);
  return out;
}

std::vector<const CitationSpan*> QueryBuilder::central_candidates(
    const DocumentCitations& cites) {
  std::vector<const CitationSpan*> out;
  std::set<std::size_t> seen_groups;
  for (const CitationSpan& s : cites.spans) {
    if (s.kind == CitationKind::case_citation) {
      if (seen_groups.insert(s.group).second) out.push_back(&s);
    } else if (s.kind == CitationKind::short_form && s.key) {
      out.push_back(&s);
    }
  }
  return out;
}

QueryOutcome QueryBuilder::build_query(const CaseDocument& doc,
                                       const CitationSpan& central,
                                       const DocumentCitations& cites,
                                       std::size_t window_words,
                                       QueryView view) const {
  QueryOutcome outcome;
  if (central.kind == CitationKind::statute) {
    outcome.reason = SkipReason::not_a_case_citation;
    return outcome;
  }
  if (!central.key) {
    outcome.reason = SkipReason::unresolvable_key;
    return outcome;
  }

  std::vector<CitationKey> targets{*central.key};
  for (const auto& k : central.parallel_keys) {
    if (!contains_key(targets, k)) targets.push_back(k);
  }
  auto resolved = corpus_.resolve_first(targets);
  if (!resolved) {
    outcome.reason = SkipReason::target_not_in_corpus;
    return outcome;
  }

  auto bounds = parser_.citation_sentence_bounds(doc.text, central, cites.spans);
  if (!bounds) {
    outcome.reason = SkipReason::sentence_bounds_failed;
    return outcome;
  }

  const std::string_view text = doc.text;
  const auto& words = cites.words;
  const std::size_t half_left = window_words / 2;
  const std::size_t half_right = window_words - half_left;

  // Words starting before the sentence (a straddling word counts as one).
  const auto left_end_it = std::lower_bound(
      words.begin(), words.end(), bounds->start,
      [](const WordSpan& w, std::size_t pos) { return w.start < pos; });
  const std::size_t left_available =
      static_cast<std::size_t>(left_end_it - words.begin());
  const std::size_t left_count = std::min(half_left, left_available);
  const std::size_t left_start =
      left_count == 0 ? bounds->start : words[left_available - left_count].start;

  // Words ending after the sentence (a straddling word counts as one).
  const auto right_begin_it = std::upper_bound(
      words.begin(), words.end(), bounds->end,
      [](std::size_t pos, const WordSpan& w) { return pos < w.end; });
  const std::size_t right_first =
      static_cast<std::size_t>(right_begin_it - words.begin());
  const std::size_t right_available = words.size() - right_first;
  const std::size_t right_count = std::min(half_right, right_available);
  const std::size_t right_end =
      right_count == 0 ? bounds->end : words[right_first + right_count - 1].end;

  RetrievalQuery q;
  q.query_id = doc.doc_id + "_" + std::to_string(central.start);
  q.doc_id = doc.doc_id;
  q.left_context = std::string(text.substr(left_start, bounds->start - left_start));
  q.central_sentence =
      std::string(text.substr(bounds->start, bounds->end - bounds->start));
  q.right_context = std::string(text.substr(bounds->end, right_end - bounds->end));
  q.view = view;
  q.central_key = *central.key;
  q.target_keys = std::move(targets);
  q.target_doc_id = resolved->second;
  q.window_words = window_words;
  q.central_start = central.start;
  q.central_offset = central.start - left_start;
  q.left_words = left_count;
  q.sentence_words = count_words(q.central_sentence);
  q.right_words = right_count;

  q.kind = classify_query(q, parser_);
  MaskedText masked = apply_view(q, view, parser_);
  q.masked_text = std::move(masked.masked);
  q.display_text = std::move(masked.display);
  q.residual_short_forms = masked.residual_short_forms;
  q.residual_central_mentions = masked.residual_central_mentions;
  outcome.query = std::move(q);
  return outcome;
}

std::vector<RetrievalQuery> QueryBuilder::build_queries(
    const CaseDocument& doc, QueryView view, std::size_t window_words,
    ConstructionReport& report) const {
  const DocumentCitations cites = analyze(doc);
  std::vector<RetrievalQuery> out;
  for (const CitationSpan* c : central_candidates(cites)) {
    QueryOutcome o = build_query(doc, *c, cites, window_words, view);
    report.record(o.reason);
    if (!o.query) continue;
    if (o.query->kind == QueryKind::direct) {
      ++report.direct;
    } else {
      ++report.indirect;
    }
    out.push_back(std::move(*o.query));
  }
  return out;
}

std::vector<QueryOutcome> QueryBuilder::sweep_query_length(
    const CaseDocument& doc, const CitationSpan& central,
    const DocumentCitations& cites, std::span<const std::size_t> lengths,
    QueryView view) const {
  std::vector<QueryOutcome> out;
  out.reserve(lengths.size());
  for (std::size_t len : lengths) {
    out.push_back(build_query(doc, central, cites, len, view));
  }
  return out;
}

// ---- masking and classification ----

MaskedText apply_view(const RetrievalQuery& query, QueryView view,
                      const CitationParser& parser) {
  MaskedText out;
  std::string masked = flatten_newlines(
      join_around(query.left_context, "", query.right_context));
  std::string display = flatten_newlines(
      join_around(query.left_context, kRedactedMarker, query.right_context));

  auto is_central_mention = [&](const CitationSpan& s) {
    return (s.kind == CitationKind::case_citation ||
            s.kind == CitationKind::short_form) &&
           s.key && contains_key(query.target_keys, *s.key);
  };
  auto should_cut = [&](const CitationSpan& s) {
    if (view == QueryView::all_removed) {
      return s.kind == CitationKind::case_citation ||
             s.kind == CitationKind::short_form;
    }
    return s.kind == CitationKind::case_citation && is_central_mention(s);
  };

  // Removing a span can splice new citation text together, so repeat until
  // a pass removes nothing.
  for (int pass = 0; pass < 8; ++pass) {
    const auto spans = parser.parse(masked);
    std::vector<std::pair<std::size_t, std::size_t>> cuts;
    for (const auto& s : spans) {
      if (!should_cut(s)) continue;
      if (is_central_mention(s)) ++out.residual_central_mentions;
      cuts.emplace_back(s.start, s.end);
    }
    if (cuts.empty()) break;
    masked = collapse_spaces(cut_spans(masked, cuts, ""));
  }
  for (int pass = 0; pass < 8; ++pass) {
    const auto spans = parser.parse(display);
    std::vector<std::pair<std::size_t, std::size_t>> cuts;
    for (const auto& s : spans) {
      if (should_cut(s)) cuts.emplace_back(s.start, s.end);
    }
    if (cuts.empty()) break;
    display = cut_spans(display, cuts, kRedactedMarker);
  }

  for (const auto& s : parser.parse(masked)) {
    if (s.kind == CitationKind::short_form) ++out.residual_short_forms;
  }
  out.masked = std::move(masked);
  out.display = std::move(display);
  return out;
}

QueryKind classify_query(const RetrievalQuery& query,
                         const CitationParser& parser) {
  const std::string window =
      query.left_context + query.central_sentence + query.right_context;
  const auto spans = parser.parse(window);
  const CitationSpan* central = nullptr;
  for (const auto& s : spans) {
    if (s.start == query.central_offset) {
      central = &s;
      break;
    }
  }
  for (const QuoteSpan& q : parser.extract_direct_quotes(window, spans)) {
    if (!q.paired_citation) continue;
    const CitationSpan& p = *q.paired_citation;
    if (central && p.start == central->start) return QueryKind::direct;
    if (central && central->kind == CitationKind::case_citation &&
        p.kind == CitationKind::case_citation && p.group == central->group) {
      return QueryKind::direct;
    }
    if (p.kind == CitationKind::short_form && p.key &&
        contains_key(query.target_keys, *p.key)) {
      return QueryKind::direct;
    }
  }
  return QueryKind::indirect;
}

// ---- qrels ----

std::vector<QrelsEntry> emit_doc_qrels(std::span<const RetrievalQuery> queries) {
  std::vector<QrelsEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& q : queries) {
    if (q.target_doc_id.empty()) continue;
    if (seen.emplace(q.query_id, q.target_doc_id).second) {
      out.push_back({q.query_id, q.target_doc_id, 1});
    }
  }
  return out;
}

std::vector<QrelsEntry> emit_passage_qrels(
    std::span<const RetrievalQuery> queries,
    const std::map<std::string, std::size_t>& passages_per_doc) {
  std::vector<QrelsEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& q : queries) {
    auto it = passages_per_doc.find(q.target_doc_id);
    if (it == passages_per_doc.end()) continue;
    for (std::size_t i = 0; i < it->second; ++i) {
      std::string pid = passage_id(q.target_doc_id, i);
      if (seen.emplace(q.query_id, pid).second) {
        out.push_back({q.query_id, std::move(pid), 1});
      }
    }
  }
  return out;
}

void write_qrels(std::ostream& out, std::span<const QrelsEntry> qrels) {
  for (const auto& e : qrels) {
    out << e.query_id << " 0 " << e.unit_id << ' ' << e.relevance << '\n';
  }
}

std::vector<QrelsEntry> read_qrels(std::istream& in) {
  std::vector<QrelsEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto words = tokenize_words(line);
    if (words.size() != 4) {
      throw DataError("qrels line " + std::to_string(lineno) +
                      ": expected 4 fields");
    }
    auto field = [&](std::size_t i) {
      return line.substr(words[i].start, words[i].size());
    };
    QrelsEntry e;
    e.query_id = field(0);
    e.unit_id = field(2);
    const std::string rel = field(3);
    if (rel != "0" && rel != "1") {
      throw DataError("qrels line " + std::to_string(lineno) +
                      ": relevance must be 0 or 1");
    }
    e.relevance = rel == "1" ? 1 : 0;
    out.push_back(std::move(e));
  }
  return out;
}

void write_queries(std::ostream& out, std::span<const RetrievalQuery> queries) {
  for (const auto& q : queries) {
    json j;
    j["query_id"] = q.query_id;
    j["doc_id"] = q.doc_id;
    j["view"] = to_string(q.view);
    j["kind"] = to_string(q.kind);
    j["window_words"] = q.window_words;
    j["masked_text"] = q.masked_text;
    j["display_text"] = q.display_text;
    j["target_keys"] = keys_to_strings(q.target_keys);
    j["central_key"] = q.central_key.to_string();
    j["target_doc_id"] = q.target_doc_id;
    j["left_context"] = q.left_context;
    j["central_sentence"] = q.central_sentence;
    j["right_context"] = q.right_context;
    j["central_start"] = q.central_start;
    j["central_offset"] = q.central_offset;
    j["left_words"] = q.left_words;
    j["sentence_words"] = q.sentence_words;
    j["right_words"] = q.right_words;
    j["residual_short_forms"] = q.residual_short_forms;
    j["residual_central_mentions"] = q.residual_central_mentions;
    j["window_counts_sentence"] = false;
    out << j.dump() << '\n';
  }
}

std::vector<RetrievalQuery> read_queries(std::istream& in) {
  static const CitationParser key_parser;
  std::vector<RetrievalQuery> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      RetrievalQuery q;
      q.query_id = j.at("query_id").get<std::string>();
      q.doc_id = j.at("doc_id").get<std::string>();
      q.view = query_view_from_string(j.at("view").get<std::string>());
      q.kind = query_kind_from_string(j.at("kind").get<std::string>());
      q.window_words = j.at("window_words").get<std::size_t>();
      q.masked_text = j.at("masked_text").get<std::string>();
      q.display_text = j.value("display_text", std::string());
      for (const auto& k : j.at("target_keys")) {
        auto key = key_parser.parse_key(k.get<std::string>());
        if (!key) throw DataError("bad target key: " + k.get<std::string>());
        q.target_keys.push_back(*key);
      }
      if (j.contains("central_key")) {
        auto key = key_parser.parse_key(j["central_key"].get<std::string>());
        if (key) q.central_key = *key;
      } else if (!q.target_keys.empty()) {
        q.central_key = q.target_keys.front();
      }
      q.target_doc_id = j.value("target_doc_id", std::string());
      q.left_context = j.value("left_context", std::string());
      q.central_sentence = j.value("central_sentence", std::string());
      q.right_context = j.value("right_context", std::string());
      q.central_start = j.value("central_start", std::size_t{0});
      q.central_offset = j.value("central_offset", std::size_t{0});
      q.left_words = j.value("left_words", std::size_t{0});
      q.sentence_words = j.value("sentence_words", std::size_t{0});
      q.right_words = j.value("right_words", std::size_t{0});
      q.residual_short_forms = j.value("residual_short_forms", std::size_t{0});
      q.residual_central_mentions =
          j.value("residual_central_mentions", std::size_t{0});
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw DataError("queries line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError("queries line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace clerc
