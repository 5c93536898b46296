#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "clerc/citation.hpp"
#include "clerc/corpus.hpp"
#include "clerc/errors.hpp"
#include "clerc/genset.hpp"
#include "clerc/metrics.hpp"
#include "clerc/pipeline.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace clerc;

namespace {

py::dict span_dict(const CitationSpan& s) {
  py::list parallel;
  for (const auto& k : s.parallel_keys) parallel.append(k.to_string());
  py::dict d("start"_a = s.start, "end"_a = s.end, "kind"_a = std::string(to_string(s.kind)),
             "raw"_a = s.raw, "group"_a = s.group, "parallel_keys"_a = parallel);
  d["key"] = s.key ? py::object(py::str(s.key->to_string())) : py::object(py::none());
  d["pincite"] = s.pincite ? py::object(py::int_(*s.pincite)) : py::object(py::none());
  return d;
}

py::tuple fraction(const Fraction& f) { return py::make_tuple(f.num, f.den); }

py::dict report_dict(const CitationReport& r) {
  py::list generated, verdicts;
  for (const auto& k : r.generated) generated.append(k.to_string());
  for (auto v : r.verdicts) verdicts.append(std::string(to_string(v)));
  return py::dict("generated"_a = generated, "verdicts"_a = verdicts, "cr"_a = fraction(r.cr),
                  "cp"_a = fraction(r.cp), "cfp"_a = fraction(r.cfp),
                  "degenerate"_a = r.degenerate);
}

std::vector<CitationKey> keys_of(const CitationParser& parser,
                                 const std::vector<std::string>& raws) {
  std::vector<CitationKey> out;
  for (const auto& raw : raws) {
    auto k = parser.parse_key(raw);
    if (!k) throw std::invalid_argument("not a case citation: " + raw);
    out.push_back(*k);
  }
  return out;
}

RankedList ranked_of(const std::vector<std::string>& ids) {
  RankedList r;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    r.entries.push_back({ids[i], static_cast<double>(ids.size() - i), i + 1});
  }
  return r;
}

py::list entries_list(const RankedList& r) {
  py::list out;
  for (const auto& e : r.entries) out.append(py::make_tuple(e.unit_id, e.score, e.rank));
  return out;
}

RougeVariant rouge_variant(const std::string& name) {
  if (name == "rouge1" || name == "1") return RougeVariant::rouge1;
  if (name == "rouge2" || name == "2") return RougeVariant::rouge2;
  if (name == "rougeL" || name == "L") return RougeVariant::rougeL;
  throw std::invalid_argument("unknown ROUGE variant: " + name);
}

}  // namespace

PYBIND11_MODULE(_clerc, m) {
  m.doc() = "Case-law citation parsing, BM25 retrieval and benchmark metrics";
  m.attr("__version__") = CLERC_VERSION;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<CaseDocument>(m, "CaseDocument")
      .def(py::init<>())
      .def_readwrite("doc_id", &CaseDocument::doc_id)
      .def_readwrite("title", &CaseDocument::title)
      .def_readwrite("reporter_cite", &CaseDocument::reporter_cite)
      .def_readonly("text", &CaseDocument::text)
      .def_property_readonly("paragraphs", [](const CaseDocument& d) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < d.paragraphs.size(); ++i) out.emplace_back(d.paragraph(i));
        return out;
      })
      .def("__repr__", [](const CaseDocument& d) {
        return "<CaseDocument " + d.doc_id + " (" + std::to_string(d.paragraphs.size()) +
               " paragraphs)>";
      });

  py::class_<Passage>(m, "Passage")
      .def_readonly("passage_id", &Passage::passage_id)
      .def_readonly("doc_id", &Passage::doc_id)
      .def_readonly("word_start", &Passage::word_start)
      .def_readonly("word_end", &Passage::word_end)
      .def_readonly("text", &Passage::text);

  m.def("make_document", [](const std::string& id, const std::vector<std::string>& paragraphs,
                            const std::string& cite, const std::string& name) {
    RawCaseRecord r{id, name, cite, {}};
    std::string text;
    for (const auto& p : paragraphs) text += p + "\n\n";
    r.opinions.push_back({"majority", text});
    std::string why;
    auto doc = normalize_record(r, &why);
    if (!doc) throw std::invalid_argument(why);
    return *doc;
  }, "doc_id"_a, "paragraphs"_a, "cite"_a = "", "name"_a = "");

  m.def("load_corpus", [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    auto result = load_corpus(in);
    py::list rejected;
    for (const auto& r : result.rejected) rejected.append(py::make_tuple(r.line, r.record_id, r.message));
    return py::make_tuple(std::move(result.documents), rejected);
  }, "path"_a, "Reads corpus JSONL; returns (documents, rejected).");

  m.def("chunk_document", &chunk_document, "doc"_a, "window"_a = kDefaultChunkWindow,
        "stride"_a = kDefaultChunkStride);

  py::class_<CitationParser>(m, "CitationParser")
      .def(py::init([](const std::string& reporters_json) {
             if (reporters_json.empty()) return CitationParser();
             std::ifstream in(reporters_json);
             if (!in) throw DataError("cannot open " + reporters_json);
             return CitationParser(ReporterTable::from_json(in));
           }),
           "reporters_json"_a = "")
      .def("parse", [](const CitationParser& p, const std::string& text) {
        py::list out;
        for (const auto& s : p.parse(text)) out.append(span_dict(s));
        return out;
      }, "text"_a)
      .def("parse_key", [](const CitationParser& p, const std::string& raw) -> py::object {
        auto k = p.parse_key(raw);
        return k ? py::object(py::str(k->to_string())) : py::object(py::none());
      }, "raw"_a)
      .def("citation_sentence", [](const CitationParser& p, const std::string& text,
                                   std::size_t offset) -> py::object {
        const auto spans = p.parse(text);
        for (const auto& s : spans) {
          if (s.start <= offset && offset < s.end) {
            auto b = p.citation_sentence_bounds(text, s, spans);
            if (!b) return py::none();
            return py::make_tuple(b->start, b->end);
          }
        }
        throw std::invalid_argument("no citation at offset");
      }, "text"_a, "offset"_a, "Byte bounds of the sentence holding the citation at offset.")
      .def("direct_quotes", [](const CitationParser& p, const std::string& text) {
        py::list out;
        for (const auto& q : p.extract_direct_quotes(text)) {
          out.append(py::dict("start"_a = q.start, "end"_a = q.end, "text"_a = q.text,
                              "citation"_a = q.paired_citation ? py::object(span_dict(*q.paired_citation))
                                                               : py::object(py::none())));
        }
        return out;
      }, "text"_a);

  m.def("build_queries", [](const std::vector<CaseDocument>& docs, const std::string& view,
                            std::size_t window) {
    const CitationParser parser;
    const auto keys = CorpusKeyIndex::build(docs, parser);
    const QueryBuilder builder(parser, keys);
    const QueryView v = query_view_from_string(view);
    py::list out;
    ConstructionReport report;
    for (const auto& doc : docs) {
      for (const auto& q : builder.build_queries(doc, v, window, report)) {
        out.append(py::dict("query_id"_a = q.query_id, "doc_id"_a = q.doc_id,
                            "central_key"_a = q.central_key.to_string(),
                            "target_doc_id"_a = q.target_doc_id,
                            "kind"_a = std::string(to_string(q.kind)),
                            "central_sentence"_a = q.central_sentence,
                            "masked_text"_a = q.masked_text, "display_text"_a = q.display_text));
      }
    }
    return out;
  }, "docs"_a, "view"_a = "single-removed", "window"_a = kDefaultQueryWindow);

  py::class_<InvertedIndex>(m, "Index")
      .def_static("build", [](const std::vector<std::pair<std::string, std::string>>& units,
                              const std::string& kind, std::size_t shards, std::size_t threads) {
        std::vector<Unit> us;
        us.reserve(units.size());
        for (const auto& [id, text] : units) us.push_back({id, text});
        IndexBuildOptions opts;
        opts.shards = shards;
        opts.threads = threads;
        py::gil_scoped_release release;
        return InvertedIndex::build(us, unit_kind_from_string(kind), opts);
      }, "units"_a, "kind"_a = "passage", "shards"_a = 1, "threads"_a = 1)
      .def_static("load", [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open " + path);
        return InvertedIndex::load(in);
      }, "path"_a)
      .def("save", [](const InvertedIndex& idx, const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        idx.save(out);
      }, "path"_a)
      .def("__len__", &InvertedIndex::size)
      .def_property_readonly("vocabulary_size", &InvertedIndex::vocabulary_size)
      .def("document_frequency", &InvertedIndex::document_frequency, "term"_a)
      .def("search", [](const InvertedIndex& idx, const std::string& query, std::size_t k,
                        double k1, double b) {
        RankedList r;
        {
          py::gil_scoped_release release;
          r = bm25_search(idx, query, k, Bm25Params{k1, b});
        }
        return entries_list(r);
      }, "query"_a, "k"_a = 1000, "k1"_a = 1.2, "b"_a = 0.75,
         "Top-k (unit_id, score, rank) tuples.");

  m.def("maxp", [](const std::vector<std::pair<std::string, double>>& passages, std::size_t k) {
    RankedList r;
    for (std::size_t i = 0; i < passages.size(); ++i) {
      r.entries.push_back({passages[i].first, passages[i].second, i + 1});
    }
    return entries_list(aggregate_maxp(r, k));
  }, "passages"_a, "k"_a = 1000);

  m.def("recall_at_k", [](const std::vector<std::string>& ranked,
                          const std::set<std::string>& positives, std::size_t k) {
    return recall_at_k(ranked_of(ranked), positives, k);
  }, "ranked"_a, "positives"_a, "k"_a);
  m.def("ndcg_at_k", [](const std::vector<std::string>& ranked,
                        const std::set<std::string>& positives, std::size_t k) {
    return ndcg_at_k(ranked_of(ranked), positives, k);
  }, "ranked"_a, "positives"_a, "k"_a = 10);

  m.def("rouge", [](const std::string& candidate, const std::string& reference,
                    const std::string& variant) {
    const auto s = rouge(candidate, reference, rouge_variant(variant));
    return py::make_tuple(s.precision, s.recall, s.f1);
  }, "candidate"_a, "reference"_a, "variant"_a = "rougeL",
     "(precision, recall, f1).");

  m.def("citation_report", [](const std::vector<std::string>& generated,
                              const std::vector<std::string>& relevant,
                              const std::vector<std::string>& grounding) {
    const CitationParser parser;
    return report_dict(citation_report(keys_of(parser, generated), keys_of(parser, relevant), grounding));
  }, "generated"_a, "relevant"_a, "grounding"_a = std::vector<std::string>{},
     "CR/CP/CFP as (num, den) from generated and relevant citation strings.");

  m.def("score_generation", [](const std::string& text, const std::vector<std::string>& relevant,
                               const std::vector<std::string>& grounding) {
    const CitationParser parser;
    return report_dict(citation_report(text, keys_of(parser, relevant), grounding, parser));
  }, "text"_a, "relevant"_a, "grounding"_a = std::vector<std::string>{},
     "Citation metrics of the case citations found in generated text.");

  m.def("render_prompt", [](const std::string& prefix,
                            const std::vector<std::pair<std::string, std::string>>& references,
                            bool with_refs) {
    const CitationParser parser;
    GenerationInstance g;
    g.prefix = prefix;
    for (const auto& [raw, text] : references) {
      const auto k = keys_of(parser, {raw}).front();
      g.cited_keys.push_back(k);
      g.references.push_back({k, "", text});
    }
    return render_prompt(g, with_refs);
  }, "prefix"_a, "references"_a, "with_refs"_a = true);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int rc;
    {
      py::gil_scoped_release release;
      rc = run_cli(args, out, err);
    }
    return py::make_tuple(rc, out.str(), err.str());
  }, "args"_a, "Runs a clerc subcommand; returns (exit_code, stdout, stderr).");
}
