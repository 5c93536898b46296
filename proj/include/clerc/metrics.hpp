#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clerc/citation.hpp"
#include "clerc/genset.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"

namespace clerc {

// ---- retrieval ----

/// Positive unit ids per query.
using QrelsMap = std::map<std::string, std::set<std::string>>;

QrelsMap positives_by_query(std::span<const QrelsEntry> qrels);

/// |top-k ∩ positives| / |positives|; 0 when there are no positives.
double recall_at_k(const RankedList& run, const std::set<std::string>& positives,
                   std::size_t k);

/// Binary-gain nDCG with 1/log2(rank+1) discounts.
double ndcg_at_k(const RankedList& run, const std::set<std::string>& positives,
                 std::size_t k);

struct QueryScores {
  std::string query_id;
  bool missing_from_run = false;
  std::vector<double> values;  // parallel to RetrievalReport::metrics
};

struct RetrievalReport {
  std::vector<std::string> metrics;  // "R@10", ..., "nDCG@10"
  std::vector<QueryScores> per_query;
  std::vector<double> macro;
  std::size_t scored = 0;
  std::size_t missing_from_run = 0;
  /// Run queries without qrels; not scored.
  std::vector<std::string> unjudged;
};

/// Every query with a positive qrels row is scored; a query absent from the
/// run scores 0 and is counted.
RetrievalReport evaluate_run(const std::map<std::string, RankedList>& run,
                             std::span<const QrelsEntry> qrels,
                             std::span<const std::size_t> recall_ks,
                             std::size_t ndcg_k = 10);

// ---- ROUGE ----

enum class RougeVariant { rouge1, rouge2, rougeL };

std::string_view to_string(RougeVariant v);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // empty candidate or reference
};

/// Clipped n-gram overlap (1, 2) or LCS (L) over normalized_words().
RougeScore rouge(std::string_view candidate, std::string_view reference,
                 RougeVariant variant);

inline double rouge_f(std::string_view candidate, std::string_view reference,
                      RougeVariant variant) {
  return rouge(candidate, reference, variant).f1;
}

// ---- citation metrics ----

struct Fraction {
  std::size_t num = 0;
  std::size_t den = 0;
  double value() const {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
  bool operator==(const Fraction&) const = default;
};

enum class CitationVerdict { matched, prefix_grounded, hallucinated };

std::string_view to_string(CitationVerdict v);

/// A generated citation: its key and the surface forms it appeared as.
struct GeneratedCitation {
  CitationKey key;
  std::vector<std::string> surface_forms;
};

struct CitationReport {
  std::vector<CitationKey> generated;  // deduplicated, first-mention order
  std::vector<CitationKey> relevant;
  std::vector<CitationVerdict> verdicts;  // parallel to generated
  Fraction cr;
  Fraction cp;
  /// Hallucinated over generated.
  Fraction cfp;
  bool degenerate = false;  // no generated citations
};

/// Scores generated citations against the relevant set. A citation not in
/// `relevant` is grounded when its canonical key string or any of its
/// surface forms is a substring of one of `grounding_texts`. Duplicate keys
/// merge. Throws std::invalid_argument when `relevant` is empty.
CitationReport citation_report(std::span<const GeneratedCitation> generated,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts);

/// Keys only; each key's surface form is its canonical string.
CitationReport citation_report(std::span<const CitationKey> generated,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts);

/// Case citations extracted from `generated_text` with `parser`.
CitationReport citation_report(std::string_view generated_text,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts,
                               const CitationParser& parser);

/// One entry per parallel group, keyed by the group's first reporter
/// citation; every reporter string of the group is a surface form.
std::vector<GeneratedCitation> extract_generated_citations(
    std::string_view text, const CitationParser& parser);

// ---- generation scoring ----

struct Generation {
  std::string instance_id;
  std::string system;
  std::string output_text;
};

std::vector<Generation> read_generations(std::istream& in);
void write_generations(std::ostream& out, std::span<const Generation> gens);

struct GenerationScoreOptions {
  /// Also count citations found in the reference texts as grounded. Off by
  /// default: grounding is checked against the prefix paragraphs only.
  bool include_references_in_substring_check = false;
  /// Pool citation numerators and denominators across instances instead of
  /// averaging per-instance fractions.
  bool micro = false;
};

inline constexpr std::array<std::string_view, 6> kGenerationMetrics = {
    "R1", "R2", "RL", "CR", "CP", "CFP"};

struct InstanceScores {
  std::string instance_id;
  std::array<double, 6> values{};  // kGenerationMetrics order
  CitationReport citations;
  bool rouge_degenerate = false;
};

struct SystemScores {
  std::string system;
  std::vector<InstanceScores> per_instance;
  std::array<double, 6> averages{};
  bool micro = false;
  std::size_t degenerate_citations = 0;  // instances with no citations
  std::size_t degenerate_rouge = 0;
  /// Generation ids with no matching instance (excluded).
  std::vector<std::string> unmatched_ids;
  /// Instances with no generation for this system.
  std::vector<std::string> missing_ids;
};

/// Scores every system found in `generations`, in name order. Averages are
/// over matched instances.
std::vector<SystemScores> score_generation_run(
    std::span<const GenerationInstance> instances,
    std::span<const Generation> generations, const CitationParser& parser,
    const GenerationScoreOptions& options = {});

struct MetricDelta {
  double with_refs = 0.0;
  double without_refs = 0.0;
  double delta = 0.0;
};

struct SystemComparison {
  std::string system;
  std::array<MetricDelta, 6> metrics{};
};

struct RunComparison {
  std::vector<SystemComparison> systems;  // systems present in both runs
  /// (mean with - mean without) / |mean without| * 100 over systems; 0 when
  /// the without-refs mean is 0.
  std::array<double, 6> avg_gain_percent{};
};

RunComparison compare_runs(std::span<const SystemScores> with_refs,
                           std::span<const SystemScores> without_refs);

// ---- report output ----

std::string retrieval_report_json(const RetrievalReport& report);
std::string retrieval_report_table(const RetrievalReport& report);
std::string generation_report_json(std::span<const SystemScores> systems,
                                   const RunComparison* comparison = nullptr);
std::string generation_report_table(std::span<const SystemScores> systems,
                                    const RunComparison* comparison = nullptr);

}  // namespace clerc
