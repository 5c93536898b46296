#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clerc/citation.hpp"
#include "clerc/corpus.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"

namespace clerc {

struct ReferenceText {
  CitationKey key;
  std::string doc_id;
  std::string text;
};

struct GenerationInstance {
  std::string instance_id;
  std::string doc_id;
  std::size_t t = 0;  // 1-based index of the gold paragraph
  std::size_t paragraph_count = 0;
  std::string prefix;  // paragraphs 1..t-1 joined by '\n'
  std::string gold;
  /// One key per citation group of the gold paragraph, in order of first
  /// mention.
  std::vector<CitationKey> cited_keys;
  /// Resolvable cited cases, in order of first mention.
  std::vector<ReferenceText> references;
  std::string prompt_with_refs;
  std::string prompt_without_refs;
  std::string salience = "bm25";
};

/// 1-based paragraph indices t with floor(2N/3) <= t <= N-2 whose paragraph
/// cites at least two distinct cases.
std::vector<std::size_t> select_reference_paragraphs(const CaseDocument& doc,
                                                     const CitationParser& parser);

struct GensetOptions {
  std::size_t salient_k = 2;
  /// Total words of reference text, split evenly across references.
  std::size_t word_budget = 6000;
  std::uint64_t seed = 0;
  std::size_t chunk_window = kDefaultChunkWindow;
  std::size_t chunk_stride = kDefaultChunkStride;
  Bm25Params bm25;
};

struct GensetReport {
  std::size_t documents = 0;
  std::size_t without_eligible_paragraph = 0;
  std::size_t built = 0;
  std::size_t skipped_unresolvable = 0;
  std::vector<std::string> diagnostics;

  GensetReport& operator+=(const GensetReport& other);
};

class GensetBuilder {
 public:
  /// `passage_index` must index the passages of `corpus` chunked with the
  /// window and stride in `options`.
  GensetBuilder(const CitationParser& parser, const CorpusKeyIndex& keys,
                std::span<const CaseDocument> corpus,
                const InvertedIndex& passage_index, GensetOptions options = {});

  /// Instance for paragraph t (1-based). Returns nullopt with a reason when
  /// t is not eligible or fewer than two cited cases resolve.
  std::optional<GenerationInstance> build_instance(const CaseDocument& doc,
                                                   std::size_t t,
                                                   std::string* why = nullptr) const;

  /// Reference text for one cited case: its top-k passages by BM25 against
  /// `gold`, merged in document order and capped at `max_words`.
  std::string salient_text(const CaseDocument& cited, std::string_view gold,
                           std::size_t max_words) const;

  /// Eligible paragraph drawn for `doc` from a generator seeded by the
  /// configured seed and the doc id.
  std::optional<std::size_t> sample_paragraph(const CaseDocument& doc) const;

  /// One instance per document.
  std::vector<GenerationInstance> build(std::span<const CaseDocument> docs,
                                        GensetReport& report,
                                        std::size_t threads = 1) const;

  const GensetOptions& options() const { return options_; }

 private:
  const CitationParser& parser_;
  const CorpusKeyIndex& keys_;
  const InvertedIndex& passage_index_;
  GensetOptions options_;
  std::map<std::string, const CaseDocument*> docs_by_id_;
};

/// Prompt text for the generation task. The "Paragrah" heading is kept as
/// written in the original template. Throws std::invalid_argument when the
/// prefix is empty.
std::string render_prompt(const GenerationInstance& instance, bool with_refs);

struct DensityProfile {
  std::array<double, 10> densities{};  // case citations per 100 words
  std::array<std::size_t, 10> words{};
  std::array<std::size_t, 10> citations{};
  std::size_t total_words = 0;
};

/// Paragraph i of N (0-based) falls in decile floor(10 i / N). Throws
/// std::invalid_argument on an empty document list.
DensityProfile citation_density_profile(std::span<const CaseDocument> docs,
                                        const CitationParser& parser);

void write_genset(std::ostream& out, std::span<const GenerationInstance> instances);
std::vector<GenerationInstance> read_genset(std::istream& in);

}  // namespace clerc
