#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clerc/citation.hpp"
#include "clerc/corpus.hpp"
#include "clerc/text.hpp"

namespace clerc {

enum class QueryView { single_removed, all_removed };
enum class QueryKind { direct, indirect };

std::string_view to_string(QueryView view);
std::string_view to_string(QueryKind kind);
QueryView query_view_from_string(std::string_view s);
QueryKind query_kind_from_string(std::string_view s);

inline constexpr std::size_t kDefaultQueryWindow = 300;
inline constexpr std::string_view kRedactedMarker = "[REDACTED]";

/// A masked context window around one central citation.
///
/// `left_context`, `central_sentence` and `right_context` are consecutive
/// slices of the source document (paragraph newlines included). The window
/// counts context words only: up to window_words/2 words on the left and the
/// rest on the right, truncated at document edges without rebalancing. The
/// central sentence is always kept whole.
struct RetrievalQuery {
  std::string query_id;
  std::string doc_id;
  std::string left_context;
  std::string central_sentence;
  std::string right_context;
  QueryView view = QueryView::single_removed;
  QueryKind kind = QueryKind::indirect;
  std::string masked_text;
  std::string display_text;
  CitationKey central_key;
  /// The central citation's parallel keys, central key first.
  std::vector<CitationKey> target_keys;
  std::string target_doc_id;
  std::size_t window_words = kDefaultQueryWindow;
  std::size_t central_start = 0;   // citation offset in the source document
  std::size_t central_offset = 0;  // citation offset in left+sentence+right
  std::size_t left_words = 0;
  std::size_t sentence_words = 0;
  std::size_t right_words = 0;
  /// Short forms left in a single-removed query (possible residual
  /// references to the central case).
  std::size_t residual_short_forms = 0;
  /// Other mentions of the central key removed from the context.
  std::size_t residual_central_mentions = 0;
};

/// Maps each document's own reporter citation to its doc id.
class CorpusKeyIndex {
 public:
  struct Conflict {
    CitationKey key;
    std::string kept_doc_id;
    std::string dropped_doc_id;
  };

  CorpusKeyIndex() = default;

  /// Documents whose reporter_cite does not parse are not indexed. On
  /// duplicate keys the first document wins and the conflict is recorded.
  static CorpusKeyIndex build(std::span<const CaseDocument> docs,
                              const CitationParser& parser);

  void add(const CitationKey& key, std::string doc_id);
  std::optional<std::string> resolve(const CitationKey& key) const;
  /// First key of `keys` that resolves, with its document.
  std::optional<std::pair<CitationKey, std::string>> resolve_first(
      std::span<const CitationKey> keys) const;

  std::size_t size() const { return keys_.size(); }
  const std::vector<Conflict>& conflicts() const { return conflicts_; }
  const std::vector<std::string>& unparsed_doc_ids() const { return unparsed_; }

 private:
  std::map<CitationKey, std::string> keys_;
  std::vector<Conflict> conflicts_;
  std::vector<std::string> unparsed_;
};

enum class SkipReason {
  none,
  not_a_case_citation,
  unresolvable_key,
  sentence_bounds_failed,
  target_not_in_corpus,
};

std::string_view to_string(SkipReason reason);

struct QueryOutcome {
  std::optional<RetrievalQuery> query;
  SkipReason reason = SkipReason::none;
};

struct ConstructionReport {
  std::size_t candidates = 0;
  std::size_t built = 0;
  std::size_t sentence_failures = 0;
  std::size_t unresolvable_keys = 0;
  std::size_t target_not_in_corpus = 0;
  std::size_t direct = 0;
  std::size_t indirect = 0;

  void record(SkipReason reason);
  /// Sentence-bound failures over candidates whose key resolved.
  double sentence_failure_rate() const;
  ConstructionReport& operator+=(const ConstructionReport& other);
};

/// Per-document citation analysis reused across queries.
struct DocumentCitations {
  std::vector<CitationSpan> spans;
  std::vector<WordSpan> words;
};

class QueryBuilder {
 public:
  QueryBuilder(const CitationParser& parser, const CorpusKeyIndex& corpus);

  DocumentCitations analyze(const CaseDocument& doc) const;

  /// One query for `central` (a case citation, or an "Id." with a resolved
  /// key). Skips, with a reason, when the key does not resolve to a corpus
  /// document or the citation sentence cannot be delimited.
  QueryOutcome build_query(const CaseDocument& doc, const CitationSpan& central,
                           const DocumentCitations& cites,
                           std::size_t window_words = kDefaultQueryWindow,
                           QueryView view = QueryView::single_removed) const;

  /// Queries for every citation group (first span of each parallel group)
  /// and every resolved "Id." in the document.
  std::vector<RetrievalQuery> build_queries(const CaseDocument& doc,
                                            QueryView view,
                                            std::size_t window_words,
                                            ConstructionReport& report) const;

  /// One query per window length; windows are nested and share the same
  /// central sentence.
  std::vector<QueryOutcome> sweep_query_length(
      const CaseDocument& doc, const CitationSpan& central,
      const DocumentCitations& cites, std::span<const std::size_t> lengths,
      QueryView view = QueryView::single_removed) const;

  /// Central citations considered by build_queries, in text order.
  static std::vector<const CitationSpan*> central_candidates(
      const DocumentCitations& cites);

  const CitationParser& parser() const { return parser_; }

 private:
  const CitationParser& parser_;
  const CorpusKeyIndex& corpus_;
};

struct MaskedText {
  std::string masked;
  std::string display;
  std::size_t residual_short_forms = 0;
  std::size_t residual_central_mentions = 0;
};

/// single-removed drops the central sentence (one space in its place) and
/// any other mention of the central key; all-removed additionally drops the
/// text of every case citation and short form. Statutes are kept. Paragraph
/// newlines become spaces.
MaskedText apply_view(const RetrievalQuery& query, QueryView view,
                      const CitationParser& parser);

/// Direct iff a direct quote in the window pairs with the central citation
/// (directly, through a parallel citation, or through "Id.").
QueryKind classify_query(const RetrievalQuery& query,
                         const CitationParser& parser);

struct QrelsEntry {
  std::string query_id;
  std::string unit_id;
  int relevance = 1;
  bool operator==(const QrelsEntry&) const = default;
};

/// Document-level qrels: one positive row per query for its target document.
std::vector<QrelsEntry> emit_doc_qrels(std::span<const RetrievalQuery> queries);

/// Passage-level qrels: every passage of the target document is positive.
/// `passages_per_doc` gives the chunk count of each document.
std::vector<QrelsEntry> emit_passage_qrels(
    std::span<const RetrievalQuery> queries,
    const std::map<std::string, std::size_t>& passages_per_doc);

/// "query_id 0 unit_id relevance" lines.
void write_qrels(std::ostream& out, std::span<const QrelsEntry> qrels);
std::vector<QrelsEntry> read_qrels(std::istream& in);

void write_queries(std::ostream& out, std::span<const RetrievalQuery> queries);
std::vector<RetrievalQuery> read_queries(std::istream& in);

}  // namespace clerc
