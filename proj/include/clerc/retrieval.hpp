#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clerc {

struct AnalyzerConfig {
  bool lowercase = true;
  /// Keep periods between alphanumerics ("u.s", "f.3d", "s.ct").
  bool keep_internal_periods = true;
  std::vector<std::string> stopwords;

  bool operator==(const AnalyzerConfig&) const = default;
};

/// Lowercases and splits on non-alphanumerics. No stemming. UTF-8
/// punctuation separates tokens; other non-ASCII bytes are kept.
class Analyzer {
 public:
  explicit Analyzer(AnalyzerConfig config = {});

  std::vector<std::string> analyze(std::string_view text) const;
  const AnalyzerConfig& config() const { return config_; }

 private:
  AnalyzerConfig config_;
  std::vector<std::string> stopwords_sorted_;
};

enum class UnitKind : std::uint8_t { passage = 0, document = 1 };

std::string_view to_string(UnitKind kind);
UnitKind unit_kind_from_string(std::string_view s);

/// A retrievable unit: a passage or a whole document.
struct Unit {
  std::string id;
  std::string text;
};

struct Posting {
  std::uint32_t unit = 0;
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct IndexBuildOptions {
  AnalyzerConfig analyzer;
  std::size_t shards = 1;
  std::size_t threads = 1;
};

/// Immutable term -> postings index over passages or documents.
///
/// Serialized layout (all integers little-endian):
///   magic    8 bytes  "CLRCIDX\0"
///   version  u32      kIndexFormatVersion
///   kind     u8       0 passage, 1 document
///   analyzer u8 lowercase, u8 keep_internal_periods,
///            u32 stopword count, then strings
///   units    u32 count, then per unit: string id, u32 length
///   terms    u32 count, then per term (sorted bytewise): string term,
///            u32 posting count, then (u32 unit, u32 tf) pairs
/// Strings are a u32 byte length followed by the bytes.
class InvertedIndex {
 public:
  static constexpr std::uint32_t kIndexFormatVersion = 1;

  InvertedIndex() = default;

  /// Units are split into `shards` contiguous ranges indexed independently
  /// (in parallel when threads > 1) and merged in order. Throws
  /// std::invalid_argument on an empty unit list or duplicate unit ids.
  static InvertedIndex build(std::span<const Unit> units, UnitKind kind,
                             const IndexBuildOptions& options = {});

  void save(std::ostream& out) const;
  /// Throws DataError on a bad magic header or version mismatch.
  static InvertedIndex load(std::istream& in);

  std::size_t size() const { return unit_ids_.size(); }
  UnitKind kind() const { return kind_; }
  double average_length() const { return average_length_; }
  std::size_t vocabulary_size() const { return terms_.size(); }
  const Analyzer& analyzer() const { return analyzer_; }

  const std::string& unit_id(std::uint32_t unit) const { return unit_ids_[unit]; }
  std::uint32_t unit_length(std::uint32_t unit) const { return unit_lengths_[unit]; }
  /// Position of the unit id in bytewise-sorted id order; used to break
  /// score ties by ascending unit id.
  std::uint32_t id_rank(std::uint32_t unit) const { return id_rank_[unit]; }

  /// Postings sorted by unit, or an empty span for unknown terms.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const {
    return postings(term).size();
  }
  const std::vector<std::string>& terms() const { return terms_; }

  /// Internal unit number for an external id, or -1.
  std::int64_t find_unit(std::string_view id) const;

 private:
  void finalize();

  UnitKind kind_ = UnitKind::passage;
  Analyzer analyzer_;
  std::vector<std::string> unit_ids_;
  std::vector<std::uint32_t> unit_lengths_;
  std::vector<std::uint32_t> id_rank_;
  double average_length_ = 0.0;
  std::vector<std::string> terms_;  // sorted
  std::vector<std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::uint32_t> term_lookup_;
  std::unordered_map<std::string, std::uint32_t> unit_lookup_;
};

struct RankedEntry {
  std::string unit_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

/// Scores non-increasing, ranks 1..n contiguous, unit ids distinct.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;
  std::size_t k = 0;
};

/// Robertson/Sparck-Jones idf with a floor at zero:
/// max(0, ln((N - n + 0.5) / (n + 0.5))).
double bm25_idf(std::size_t unit_count, std::size_t doc_freq);

/// Top-k units by BM25 over the analyzed query (query term multiplicity
/// counts). Only units with a positive score are listed; ties go to the
/// smaller unit id. An empty analyzed query yields an empty list.
RankedList bm25_search(const InvertedIndex& index, std::string_view query,
                       std::size_t k, const Bm25Params& params = {},
                       std::string query_id = {});

/// BM25 scores of selected units (by internal number) against `query`.
std::vector<double> bm25_score_units(const InvertedIndex& index,
                                     std::string_view query,
                                     std::span<const std::uint32_t> units,
                                     const Bm25Params& params = {});

/// Runs bm25_search for each (query_id, text) pair on `threads` workers;
/// output order follows the input.
std::vector<RankedList> bm25_search_batch(
    const InvertedIndex& index,
    std::span<const std::pair<std::string, std::string>> queries, std::size_t k,
    const Bm25Params& params = {}, std::size_t threads = 1);

/// MaxP: a document scores the maximum of its passages present in the
/// passage ranking. Ties go to the smaller doc id.
RankedList aggregate_maxp(
    const RankedList& passages,
    const std::unordered_map<std::string, std::string>& passage_to_doc,
    std::size_t k);

/// MaxP using the "<doc_id>#<n>" passage id convention.
RankedList aggregate_maxp(const RankedList& passages, std::size_t k);

/// Exact-substring and word n-gram retrieval of direct quotes.
class QuoteRetriever {
 public:
  /// Builds n-gram postings for each requested n.
  explicit QuoteRetriever(std::vector<Unit> units,
                          std::vector<std::size_t> ngram_sizes = {5, 12});

  /// Units whose text contains the quote verbatim once curly double
  /// quotation marks are removed from both. Throws std::invalid_argument on
  /// an empty quote.
  std::vector<std::string> exact_match_search(std::string_view quote) const;

  /// Score = number of distinct word n-grams of the quote present in the
  /// unit (case-folded, punctuation-stripped words). Quotes shorter than n
  /// words fall back to exact matching with score 1. Throws
  /// std::invalid_argument when n was not built.
  RankedList ngram_search(std::string_view quote, std::size_t n, std::size_t k,
                          std::string query_id = {}) const;

  std::size_t size() const { return units_.size(); }

 private:
  std::vector<Unit> units_;
  std::vector<std::string> stripped_texts_;
  std::vector<std::uint32_t> id_rank_;
  std::map<std::size_t, std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>>
      ngram_postings_;
};

/// Hash of n consecutive normalized words.
std::uint64_t ngram_hash(std::span<const std::string> words);

/// Removes U+201C and U+201D.
std::string strip_curly_quotes(std::string_view text);

/// TREC run lines: "query_id Q0 unit_id rank score tag".
void write_trec_run(std::ostream& out, std::span<const RankedList> runs,
                    std::string_view tag);

/// Entries are ordered by the rank column. Throws DataError on malformed
/// lines.
std::map<std::string, RankedList> read_trec_run(std::istream& in);

}  // namespace clerc
