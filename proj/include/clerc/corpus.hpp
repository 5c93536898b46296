#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clerc {

struct ParagraphSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const ParagraphSpan&) const = default;
};

/// One case opinion text. Paragraphs are separated by single '\n' bytes in
/// `text` and `paragraphs` lists them in order, excluding the separators.
struct CaseDocument {
  std::string doc_id;
  std::string title;
  std::string reporter_cite;
  std::string text;
  std::vector<ParagraphSpan> paragraphs;

  std::string_view paragraph(std::size_t index) const {
    const ParagraphSpan& p = paragraphs.at(index);
    return std::string_view(text).substr(p.start, p.end - p.start);
  }
};

struct RawOpinion {
  std::string type;
  std::string text;
};

/// Input record shape: {id, name, cite, opinions: [{type, text}]}.
struct RawCaseRecord {
  std::string id;
  std::string name;
  std::string cite;
  std::vector<RawOpinion> opinions;
};

struct CorpusDiagnostic {
  std::size_t line = 0;  // 1-based JSONL line, 0 when not read from a stream
  std::string record_id;
  std::string message;
};

struct LoadResult {
  std::vector<CaseDocument> documents;
  std::vector<CorpusDiagnostic> rejected;
};

/// Normalizes one record. Within an opinion, a single newline becomes a
/// space and a blank line starts a new paragraph; other whitespace runs
/// collapse to one space. Opinions are joined in record order, each starting
/// a new paragraph. Returns nullopt (and sets `why`) when the record has no
/// id or no non-empty opinion text.
std::optional<CaseDocument> normalize_record(const RawCaseRecord& record,
                                             std::string* why = nullptr);

LoadResult load_corpus(std::span<const RawCaseRecord> records);

/// Reads corpus JSONL. Malformed lines and invalid records are reported in
/// `rejected`; the stream keeps going. Later duplicates of a doc_id are
/// rejected.
LoadResult load_corpus(std::istream& jsonl);

/// Writes documents in the input record shape (a single "combined" opinion
/// whose paragraphs are separated by blank lines), so load_corpus reads them
/// back unchanged.
void write_documents(std::ostream& out, std::span<const CaseDocument> docs);

/// Reads a document file written by write_documents; throws on bad input.
std::vector<CaseDocument> read_documents(std::istream& in);

struct Passage {
  std::string passage_id;  // "<doc_id>#<chunk_index>"
  std::string doc_id;
  std::size_t word_start = 0;
  std::size_t word_end = 0;
  std::string text;
};

inline constexpr std::size_t kDefaultChunkWindow = 350;
inline constexpr std::size_t kDefaultChunkStride = 175;

/// Sliding word windows. Chunk i covers [i*stride, min(i*stride+window, W));
/// emission stops after the first chunk that reaches the end of the document,
/// since every later chunk would add no new words. Throws
/// std::invalid_argument unless window >= stride >= 1.
std::vector<Passage> chunk_document(const CaseDocument& doc,
                                    std::size_t window = kDefaultChunkWindow,
                                    std::size_t stride = kDefaultChunkStride);

std::string passage_id(std::string_view doc_id, std::size_t chunk_index);

/// Parent document of a passage id ("abc#3" -> "abc"); ids without '#'
/// are returned unchanged.
std::string_view doc_of_passage(std::string_view passage_id);

void write_passages(std::ostream& out, std::span<const Passage> passages);
std::vector<Passage> read_passages(std::istream& in);

}  // namespace clerc
