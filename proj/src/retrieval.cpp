#include "clerc/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "clerc/corpus.hpp"
#include "clerc/errors.hpp"
#include "clerc/text.hpp"

namespace clerc {

// ---------------------------------------------------------------------------
// Analyzer

Analyzer::Analyzer(AnalyzerConfig config) : config_(std::move(config)) {
  stopwords_sorted_ = config_.stopwords;
  for (auto& w : stopwords_sorted_) w = to_lower_ascii(w);
  std::sort(stopwords_sorted_.begin(), stopwords_sorted_.end());
}

std::vector<std::string> Analyzer::analyze(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (stopwords_sorted_.empty() ||
        !std::binary_search(stopwords_sorted_.begin(), stopwords_sorted_.end(),
                            current)) {
      tokens.push_back(std::move(current));
    }
    current.clear();
  };
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (const std::size_t p = utf8_punctuation_length(text, i); p > 0) {
      flush();
      i += p;
      continue;
    }
    const char c = text[i];
    const auto u = static_cast<unsigned char>(c);
    if (is_alnum(c) || u >= 0x80) {
      current.push_back(config_.lowercase ? to_lower(c) : c);
    } else if (c == '.' && config_.keep_internal_periods && !current.empty() &&
               is_alnum(current.back()) && i + 1 < n && is_alnum(text[i + 1])) {
      current.push_back('.');
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return tokens;
}

std::string_view to_string(UnitKind kind) {
  return kind == UnitKind::passage ? "passage" : "document";
}

UnitKind unit_kind_from_string(std::string_view s) {
  if (s == "passage") return UnitKind::passage;
  if (s == "document" || s == "doc") return UnitKind::document;
  throw std::invalid_argument("unknown unit kind: " + std::string(s));
}

// ---------------------------------------------------------------------------
// InvertedIndex

namespace {

using ShardPostings = std::unordered_map<std::string, std::vector<Posting>>;

void index_shard(std::span<const Unit> units, std::uint32_t first_unit,
                 const Analyzer& analyzer, ShardPostings& postings,
                 std::vector<std::uint32_t>& lengths) {
  std::unordered_map<std::string, std::uint32_t> counts;
  for (std::size_t i = 0; i < units.size(); ++i) {
    counts.clear();
    const std::vector<std::string> tokens = analyzer.analyze(units[i].text);
    lengths[first_unit + i] = static_cast<std::uint32_t>(tokens.size());
    for (const std::string& t : tokens) ++counts[t];
    const auto unit = static_cast<std::uint32_t>(first_unit + i);
    for (auto& [term, tf] : counts) postings[term].push_back({unit, tf});
  }
}

}  // namespace

InvertedIndex InvertedIndex::build(std::span<const Unit> units, UnitKind kind,
                                   const IndexBuildOptions& options) {
  if (units.empty()) throw std::invalid_argument("cannot index zero units");
  if (units.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("too many units for one index");
  }
  InvertedIndex index;
  index.kind_ = kind;
  index.analyzer_ = Analyzer(options.analyzer);
  index.unit_ids_.reserve(units.size());
  for (const Unit& u : units) index.unit_ids_.push_back(u.id);
  index.unit_lengths_.assign(units.size(), 0);

  const std::size_t shard_count =
      std::clamp<std::size_t>(options.shards, 1, units.size());
  std::vector<ShardPostings> shards(shard_count);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t s = 0; s < shard_count; ++s) {
    ranges.emplace_back(units.size() * s / shard_count,
                        units.size() * (s + 1) / shard_count);
  }
  auto run_shard = [&](std::size_t s) {
    const auto [b, e] = ranges[s];
    index_shard(units.subspan(b, e - b), static_cast<std::uint32_t>(b),
                index.analyzer_, shards[s], index.unit_lengths_);
  };
  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  if (threads == 1 || shard_count == 1) {
    for (std::size_t s = 0; s < shard_count; ++s) run_shard(s);
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < std::min(threads, shard_count); ++t) {
      workers.emplace_back([&] {
        for (std::size_t s = next++; s < shard_count; s = next++) run_shard(s);
      });
    }
    for (auto& w : workers) w.join();
  }

  // Merge: shards cover increasing unit ranges, so appending keeps postings
  // sorted by unit.
  ShardPostings merged = std::move(shards.front());
  for (std::size_t s = 1; s < shard_count; ++s) {
    for (auto& [term, list] : shards[s]) {
      auto& dst = merged[term];
      dst.insert(dst.end(), list.begin(), list.end());
    }
    ShardPostings().swap(shards[s]);
  }
  index.terms_.reserve(merged.size());
  for (const auto& [term, list] : merged) index.terms_.push_back(term);
  std::sort(index.terms_.begin(), index.terms_.end());
  index.postings_.reserve(index.terms_.size());
  for (const std::string& term : index.terms_) {
    index.postings_.push_back(std::move(merged[term]));
  }
  index.finalize();
  return index;
}

void InvertedIndex::finalize() {
  const std::size_t n = unit_ids_.size();
  unit_lookup_.clear();
  unit_lookup_.reserve(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    if (!unit_lookup_.emplace(unit_ids_[u], u).second) {
      throw std::invalid_argument("duplicate unit id: " + unit_ids_[u]);
    }
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return unit_ids_[a] < unit_ids_[b];
  });
  id_rank_.assign(n, 0);
  for (std::uint32_t r = 0; r < n; ++r) id_rank_[order[r]] = r;

  double total = 0.0;
  for (std::uint32_t len : unit_lengths_) total += len;
  average_length_ = n == 0 ? 0.0 : total / static_cast<double>(n);

  term_lookup_.clear();
  term_lookup_.reserve(terms_.size());
  for (std::uint32_t t = 0; t < terms_.size(); ++t) term_lookup_.emplace(terms_[t], t);
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = term_lookup_.find(std::string(term));
  if (it == term_lookup_.end()) return {};
  return postings_[it->second];
}

std::int64_t InvertedIndex::find_unit(std::string_view id) const {
  auto it = unit_lookup_.find(std::string(id));
  return it == unit_lookup_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

namespace {

constexpr char kMagic[8] = {'C', 'L', 'R', 'C', 'I', 'D', 'X', '\0'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("index: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw DataError("index: truncated file");
  return static_cast<std::uint8_t>(c);
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw DataError("index: truncated file");
  return s;
}

}  // namespace

void InvertedIndex::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kIndexFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(kind_));
  const AnalyzerConfig& ac = analyzer_.config();
  put_u8(out, ac.lowercase ? 1 : 0);
  put_u8(out, ac.keep_internal_periods ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(ac.stopwords.size()));
  for (const auto& w : ac.stopwords) put_string(out, w);
  put_u32(out, static_cast<std::uint32_t>(unit_ids_.size()));
  for (std::size_t u = 0; u < unit_ids_.size(); ++u) {
    put_string(out, unit_ids_[u]);
    put_u32(out, unit_lengths_[u]);
  }
  put_u32(out, static_cast<std::uint32_t>(terms_.size()));
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    put_string(out, terms_[t]);
    put_u32(out, static_cast<std::uint32_t>(postings_[t].size()));
    for (const Posting& p : postings_[t]) {
      put_u32(out, p.unit);
      put_u32(out, p.tf);
    }
  }
}

InvertedIndex InvertedIndex::load(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + 8, kMagic)) {
    throw DataError("index: bad magic header");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kIndexFormatVersion) {
    throw DataError("index: format version " + std::to_string(version) +
                    " does not match supported version " +
                    std::to_string(kIndexFormatVersion));
  }
  InvertedIndex index;
  const std::uint8_t kind = get_u8(in);
  if (kind > 1) throw DataError("index: bad unit kind");
  index.kind_ = static_cast<UnitKind>(kind);
  AnalyzerConfig ac;
  ac.lowercase = get_u8(in) != 0;
  ac.keep_internal_periods = get_u8(in) != 0;
  const std::uint32_t stop_count = get_u32(in);
  for (std::uint32_t i = 0; i < stop_count; ++i) ac.stopwords.push_back(get_string(in));
  index.analyzer_ = Analyzer(ac);
  const std::uint32_t units = get_u32(in);
  index.unit_ids_.reserve(units);
  index.unit_lengths_.reserve(units);
  for (std::uint32_t u = 0; u < units; ++u) {
    index.unit_ids_.push_back(get_string(in));
    index.unit_lengths_.push_back(get_u32(in));
  }
  const std::uint32_t terms = get_u32(in);
  index.terms_.reserve(terms);
  index.postings_.reserve(terms);
  for (std::uint32_t t = 0; t < terms; ++t) {
    index.terms_.push_back(get_string(in));
    const std::uint32_t count = get_u32(in);
    std::vector<Posting> list(count);
    for (auto& p : list) {
      p.unit = get_u32(in);
      p.tf = get_u32(in);
      if (p.unit >= units) throw DataError("index: posting refers to unknown unit");
    }
    index.postings_.push_back(std::move(list));
  }
  index.finalize();
  return index;
}

// ---------------------------------------------------------------------------
// BM25

double bm25_idf(std::size_t unit_count, std::size_t doc_freq) {
  const double n = static_cast<double>(unit_count);
  const double df = static_cast<double>(doc_freq);
  return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
}

namespace {

// Distinct analyzed query terms with their multiplicity, sorted by term.
std::vector<std::pair<std::string, std::uint32_t>> query_terms(
    const Analyzer& analyzer, std::string_view query) {
  std::vector<std::string> tokens = analyzer.analyze(query);
  std::sort(tokens.begin(), tokens.end());
  std::vector<std::pair<std::string, std::uint32_t>> out;
  for (auto& t : tokens) {
    if (!out.empty() && out.back().first == t) {
      ++out.back().second;
    } else {
      out.emplace_back(std::move(t), 1);
    }
  }
  return out;
}

double bm25_term(double idf, double tf, double len, double avg,
                 const Bm25Params& p) {
  const double norm = avg > 0.0 ? len / avg : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

RankedList bm25_search(const InvertedIndex& index, std::string_view query,
                       std::size_t k, const Bm25Params& params,
                       std::string query_id) {
  RankedList result;
  result.query_id = std::move(query_id);
  result.k = k;
  const auto terms = query_terms(index.analyzer(), query);
  if (terms.empty() || k == 0) return result;

  std::vector<double> scores(index.size(), 0.0);
  std::vector<std::uint32_t> touched;
  const double avg = index.average_length();
  for (const auto& [term, qtf] : terms) {
    const auto list = index.postings(term);
    if (list.empty()) continue;
    const double idf = bm25_idf(index.size(), list.size());
    if (idf <= 0.0) continue;
    for (const Posting& p : list) {
      if (scores[p.unit] == 0.0) touched.push_back(p.unit);
      scores[p.unit] += qtf * bm25_term(idf, p.tf, index.unit_length(p.unit), avg, params);
    }
  }
  touched.erase(std::remove_if(touched.begin(), touched.end(),
                               [&](std::uint32_t u) { return !(scores[u] > 0.0); }),
                touched.end());
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.id_rank(a) < index.id_rank(b);
  };
  const std::size_t take = std::min(k, touched.size());
  std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(take),
                    touched.end(), better);
  result.entries.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    result.entries.push_back({index.unit_id(touched[r]), scores[touched[r]], r + 1});
  }
  return result;
}

std::vector<double> bm25_score_units(const InvertedIndex& index,
                                     std::string_view query,
                                     std::span<const std::uint32_t> units,
                                     const Bm25Params& params) {
  std::vector<double> out(units.size(), 0.0);
  const auto terms = query_terms(index.analyzer(), query);
  const double avg = index.average_length();
  for (const auto& [term, qtf] : terms) {
    const auto list = index.postings(term);
    if (list.empty()) continue;
    const double idf = bm25_idf(index.size(), list.size());
    if (idf <= 0.0) continue;
    for (std::size_t i = 0; i < units.size(); ++i) {
      auto it = std::lower_bound(
          list.begin(), list.end(), units[i],
          [](const Posting& p, std::uint32_t u) { return p.unit < u; });
      if (it == list.end() || it->unit != units[i]) continue;
      out[i] += qtf * bm25_term(idf, it->tf, index.unit_length(units[i]), avg, params);
    }
  }
  return out;
}

std::vector<RankedList> bm25_search_batch(
    const InvertedIndex& index,
    std::span<const std::pair<std::string, std::string>> queries, std::size_t k,
    const Bm25Params& params, std::size_t threads) {
  std::vector<RankedList> out(queries.size());
  auto work = [&](std::size_t i) {
    out[i] = bm25_search(index, queries[i].second, k, params, queries[i].first);
  };
  threads = std::max<std::size_t>(1, std::min(threads, queries.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < queries.size(); i = next++) work(i);
    });
  }
  for (auto& w : workers) w.join();
  return out;
}

// ---------------------------------------------------------------------------
// MaxP

RankedList aggregate_maxp(
    const RankedList& passages,
    const std::unordered_map<std::string, std::string>& passage_to_doc,
    std::size_t k) {
  std::unordered_map<std::string, double> best;
  for (const RankedEntry& e : passages.entries) {
    auto it = passage_to_doc.find(e.unit_id);
    const std::string doc =
        it == passage_to_doc.end() ? std::string(doc_of_passage(e.unit_id)) : it->second;
    auto [pos, inserted] = best.emplace(doc, e.score);
    if (!inserted) pos->second = std::max(pos->second, e.score);
  }
  std::vector<std::pair<std::string, double>> docs(best.begin(), best.end());
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  RankedList out;
  out.query_id = passages.query_id;
  out.k = k;
  const std::size_t take = std::min(k, docs.size());
  for (std::size_t r = 0; r < take; ++r) {
    out.entries.push_back({docs[r].first, docs[r].second, r + 1});
  }
  return out;
}

RankedList aggregate_maxp(const RankedList& passages, std::size_t k) {
  return aggregate_maxp(passages, {}, k);
}

// ---------------------------------------------------------------------------
// Quote retrieval

std::uint64_t ngram_hash(std::span<const std::string> words) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::string& w : words) {
    for (char c : w) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= 0x1F;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string strip_curly_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.substr(i).starts_with(kOpenQuote) ||
        text.substr(i).starts_with(kCloseQuote)) {
      i += kOpenQuote.size();
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

namespace {

std::vector<std::uint64_t> distinct_ngrams(const std::vector<std::string>& words,
                                           std::size_t n) {
  std::vector<std::uint64_t> hashes;
  if (words.size() < n) return hashes;
  hashes.reserve(words.size() - n + 1);
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    hashes.push_back(ngram_hash(std::span<const std::string>(words).subspan(i, n)));
  }
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
  return hashes;
}

}  // namespace

QuoteRetriever::QuoteRetriever(std::vector<Unit> units,
                               std::vector<std::size_t> ngram_sizes)
    : units_(std::move(units)) {
  stripped_texts_.reserve(units_.size());
  for (const Unit& u : units_) stripped_texts_.push_back(strip_curly_quotes(u.text));

  std::vector<std::uint32_t> order(units_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return units_[a].id < units_[b].id;
  });
  id_rank_.assign(units_.size(), 0);
  for (std::uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;

  for (std::size_t n : ngram_sizes) {
    if (n == 0) throw std::invalid_argument("n-gram size must be positive");
    auto& postings = ngram_postings_[n];
    for (std::uint32_t u = 0; u < units_.size(); ++u) {
      const auto words = normalized_words(units_[u].text);
      for (std::uint64_t h : distinct_ngrams(words, n)) postings[h].push_back(u);
    }
  }
}

std::vector<std::string> QuoteRetriever::exact_match_search(
    std::string_view quote) const {
  const std::string needle = trim(strip_curly_quotes(quote));
  if (needle.empty()) throw std::invalid_argument("empty quote");
  std::vector<std::string> hits;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    if (stripped_texts_[u].find(needle) != std::string::npos) hits.push_back(units_[u].id);
  }
  return hits;
}

RankedList QuoteRetriever::ngram_search(std::string_view quote, std::size_t n,
                                        std::size_t k,
                                        std::string query_id) const {
  RankedList result;
  result.query_id = std::move(query_id);
  result.k = k;
  auto it = ngram_postings_.find(n);
  if (it == ngram_postings_.end()) {
    throw std::invalid_argument("n-gram size " + std::to_string(n) + " was not indexed");
  }
  const auto words = normalized_words(quote);
  if (words.size() < n) {
    std::vector<std::string> hits = exact_match_search(quote);
    std::sort(hits.begin(), hits.end());
    for (std::size_t r = 0; r < hits.size() && r < k; ++r) {
      result.entries.push_back({hits[r], 1.0, r + 1});
    }
    return result;
  }
  std::unordered_map<std::uint32_t, std::uint32_t> counts;
  for (std::uint64_t h : distinct_ngrams(words, n)) {
    auto p = it->second.find(h);
    if (p == it->second.end()) continue;
    for (std::uint32_t u : p->second) ++counts[u];
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return id_rank_[a.first] < id_rank_[b.first];
  });
  for (std::size_t r = 0; r < ranked.size() && r < k; ++r) {
    result.entries.push_back(
        {units_[ranked[r].first].id, static_cast<double>(ranked[r].second), r + 1});
  }
  return result;
}

// ---------------------------------------------------------------------------
// TREC runs

void write_trec_run(std::ostream& out, std::span<const RankedList> runs,
                    std::string_view tag) {
  char score[64];
  for (const RankedList& run : runs) {
    for (const RankedEntry& e : run.entries) {
      std::snprintf(score, sizeof(score), "%.6f", e.score);
      out << run.query_id << " Q0 " << e.unit_id << ' ' << e.rank << ' ' << score
          << ' ' << tag << '\n';
    }
  }
}

std::map<std::string, RankedList> read_trec_run(std::istream& in) {
  std::map<std::string, RankedList> runs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string qid, q0, unit, tag;
    long long rank = 0;
    double score = 0.0;
    if (!(fields >> qid >> q0 >> unit >> rank >> score) || rank < 1) {
      throw DataError("run file line " + std::to_string(line_no) +
                      ": expected 'query_id Q0 unit_id rank score tag'");
    }
    RankedList& run = runs[qid];
    run.query_id = qid;
    run.entries.push_back({unit, score, static_cast<std::size_t>(rank)});
  }
  for (auto& [qid, run] : runs) {
    std::stable_sort(run.entries.begin(), run.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) {
                       return a.rank < b.rank;
                     });
    run.k = run.entries.size();
  }
  return runs;
}

}  // namespace clerc
