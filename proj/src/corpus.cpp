#include "clerc/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "clerc/errors.hpp"
#include "clerc/text.hpp"
#include "json.hpp"

namespace clerc {

using json = nlohmann::json;

namespace {

// Splits one opinion into normalized paragraphs: blank lines separate
// paragraphs, every other whitespace run becomes one space.
void append_opinion_paragraphs(std::string_view text,
                               std::vector<std::string>& paragraphs) {
  std::string current;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_space(text[i])) {
      current.push_back(text[i++]);
      continue;
    }
    std::size_t newlines = 0;
    while (i < n && is_space(text[i])) {
      if (text[i] == '\n') ++newlines;
      ++i;
    }
    if (newlines >= 2) {
      if (!current.empty()) paragraphs.push_back(std::move(current));
      current.clear();
    } else if (!current.empty() && i < n) {
      current.push_back(' ');
    }
  }
  if (!current.empty()) paragraphs.push_back(std::move(current));
}

RawCaseRecord record_from_json(const json& j) {
  RawCaseRecord r;
  auto str = [&](const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (j[key].is_string()) return j[key].get<std::string>();
    if (j[key].is_number_integer()) return std::to_string(j[key].get<long long>());
    throw DataError(std::string("field '") + key + "' is not a string");
  };
  r.id = str("id");
  r.name = str("name");
  r.cite = str("cite");
  if (j.contains("opinions")) {
    const json& ops = j["opinions"];
    if (!ops.is_array()) throw DataError("field 'opinions' is not an array");
    for (const json& op : ops) {
      RawOpinion o;
      if (op.is_string()) {
        o.text = op.get<std::string>();
      } else if (op.is_object()) {
        o.type = op.value("type", std::string());
        o.text = op.value("text", std::string());
      } else {
        throw DataError("opinion entry is neither a string nor an object");
      }
      r.opinions.push_back(std::move(o));
    }
  }
  return r;
}

}  // namespace

std::optional<CaseDocument> normalize_record(const RawCaseRecord& record,
                                             std::string* why) {
  auto reject = [&](const char* message) -> std::optional<CaseDocument> {
    if (why) *why = message;
    return std::nullopt;
  };
  if (trim(record.id).empty()) return reject("record has no id");

  std::vector<std::string> paragraphs;
  for (const RawOpinion& op : record.opinions) {
    append_opinion_paragraphs(op.text, paragraphs);
  }
  if (paragraphs.empty()) return reject("record has no opinion text");

  CaseDocument doc;
  doc.doc_id = trim(record.id);
  doc.title = squeeze_whitespace(record.name);
  doc.reporter_cite = squeeze_whitespace(record.cite);
  for (const std::string& p : paragraphs) {
    if (!doc.text.empty()) doc.text.push_back('\n');
    const std::size_t start = doc.text.size();
    doc.text += p;
    doc.paragraphs.push_back({start, doc.text.size()});
  }
  return doc;
}

LoadResult load_corpus(std::span<const RawCaseRecord> records) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  for (const RawCaseRecord& r : records) {
    std::string why;
    auto doc = normalize_record(r, &why);
    if (!doc) {
      result.rejected.push_back({0, r.id, why});
      continue;
    }
    if (!seen.insert(doc->doc_id).second) {
      result.rejected.push_back({0, r.id, "duplicate doc id"});
      continue;
    }
    result.documents.push_back(std::move(*doc));
  }
  return result;
}

LoadResult load_corpus(std::istream& jsonl) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawCaseRecord record;
    try {
      record = record_from_json(json::parse(line));
    } catch (const std::exception& e) {
      result.rejected.push_back({line_no, {}, e.what()});
      continue;
    }
    std::string why;
    auto doc = normalize_record(record, &why);
    if (!doc) {
      result.rejected.push_back({line_no, record.id, why});
      continue;
    }
    if (!seen.insert(doc->doc_id).second) {
      result.rejected.push_back({line_no, record.id, "duplicate doc id"});
      continue;
    }
    result.documents.push_back(std::move(*doc));
  }
  return result;
}

void write_documents(std::ostream& out, std::span<const CaseDocument> docs) {
  for (const CaseDocument& d : docs) {
    std::string combined;
    for (std::size_t i = 0; i < d.paragraphs.size(); ++i) {
      if (i > 0) combined += "\n\n";
      combined += d.paragraph(i);
    }
    json j = {{"id", d.doc_id},
              {"name", d.title},
              {"cite", d.reporter_cite},
              {"opinions", json::array({{{"type", "combined"}, {"text", combined}}})}};
    out << j.dump() << '\n';
  }
}

std::vector<CaseDocument> read_documents(std::istream& in) {
  LoadResult r = load_corpus(in);
  if (!r.rejected.empty()) {
    const CorpusDiagnostic& d = r.rejected.front();
    throw DataError("document file line " + std::to_string(d.line) + ": " +
                    d.message);
  }
  return std::move(r.documents);
}

std::vector<Passage> chunk_document(const CaseDocument& doc, std::size_t window,
                                    std::size_t stride) {
  if (stride == 0 || window < stride) {
    throw std::invalid_argument("chunking requires window >= stride >= 1");
  }
  const std::vector<WordSpan> words = tokenize_words(doc.text);
  const std::size_t total = words.size();
  std::vector<Passage> passages;
  for (std::size_t i = 0; i * stride < total; ++i) {
    const std::size_t begin = i * stride;
    const std::size_t end = std::min(begin + window, total);
    Passage p;
    p.passage_id = passage_id(doc.doc_id, i);
    p.doc_id = doc.doc_id;
    p.word_start = begin;
    p.word_end = end;
    for (std::size_t w = begin; w < end; ++w) {
      if (w > begin) p.text.push_back(' ');
      p.text.append(doc.text, words[w].start, words[w].size());
    }
    passages.push_back(std::move(p));
    if (end == total) break;
  }
  return passages;
}

std::string passage_id(std::string_view doc_id, std::size_t chunk_index) {
  std::string id(doc_id);
  id.push_back('#');
  id += std::to_string(chunk_index);
  return id;
}

std::string_view doc_of_passage(std::string_view passage_id) {
  const auto hash = passage_id.rfind('#');
  return hash == std::string_view::npos ? passage_id
                                        : passage_id.substr(0, hash);
}

void write_passages(std::ostream& out, std::span<const Passage> passages) {
  for (const Passage& p : passages) {
    json j = {{"passage_id", p.passage_id},
              {"doc_id", p.doc_id},
              {"word_start", p.word_start},
              {"word_end", p.word_end},
              {"text", p.text}};
    out << j.dump() << '\n';
  }
}

std::vector<Passage> read_passages(std::istream& in) {
  std::vector<Passage> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Passage p;
      p.passage_id = j.at("passage_id").get<std::string>();
      p.doc_id = j.at("doc_id").get<std::string>();
      p.word_start = j.at("word_start").get<std::size_t>();
      p.word_end = j.at("word_end").get<std::size_t>();
      p.text = j.at("text").get<std::string>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError("passage file line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return out;
}

}  // namespace clerc
