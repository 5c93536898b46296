#include "clerc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "clerc/citation.hpp"
#include "clerc/corpus.hpp"
#include "clerc/errors.hpp"
#include "clerc/genset.hpp"
#include "clerc/metrics.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"
#include "clerc/text.hpp"

namespace clerc {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- hashing ----

namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

struct DigestContext {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  DigestContext() { EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr); }
  ~DigestContext() { EVP_MD_CTX_free(ctx); }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx, data, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    return to_hex(md, len);
  }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestContext d;
  d.update(data.data(), data.size());
  return d.finish();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  DigestContext d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.finish();
}

// ---- config ----

namespace {

std::size_t parse_positive(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(std::string(key), "expected a positive integer, got '" +
                                            std::string(v) + "'");
  }
  if (out == 0) throw ConfigError(std::string(key), "must be positive");
  return out;
}

double parse_positive_double(std::string_view key, std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(std::string(key), "expected a number, got '" + s + "'");
  }
  if (!(d > 0.0)) throw ConfigError(std::string(key), "must be positive");
  return d;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" +
                                          std::string(v) + "'");
}

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k = {
      "chunk_window", "chunk_stride", "query_window", "view", "kind",
      "bm25_k1", "bm25_b", "ngram_n", "seed", "salient_k", "word_budget", "k",
      "maxp_depth", "shards", "threads", "quote_pairing_window",
      "include_references_in_substring_check", "micro_average", "reporters"};
  return k;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const std::string v = unquote(trim(value));
  if (key == "chunk_window") chunk_window = parse_positive(key, v);
  else if (key == "chunk_stride") chunk_stride = parse_positive(key, v);
  else if (key == "query_window") query_window = parse_positive(key, v);
  else if (key == "view") {
    if (v != "single-removed" && v != "all-removed") {
      throw ConfigError("view", "expected single-removed or all-removed");
    }
    view = v;
  } else if (key == "kind") {
    if (v != "direct" && v != "indirect" && v != "all") {
      throw ConfigError("kind", "expected direct, indirect or all");
    }
    kind = v;
  } else if (key == "bm25_k1") bm25_k1 = parse_positive_double(key, v);
  else if (key == "bm25_b") {
    bm25_b = parse_positive_double(key, v);
    if (bm25_b > 1.0) throw ConfigError("bm25_b", "must not exceed 1");
  } else if (key == "ngram_n") ngram_n = parse_positive(key, v);
  else if (key == "seed") {
    std::uint64_t s = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError("seed", "expected a non-negative integer, got '" + v + "'");
    }
    seed = s;
  } else if (key == "salient_k") salient_k = parse_positive(key, v);
  else if (key == "word_budget") word_budget = parse_positive(key, v);
  else if (key == "k") k = parse_positive(key, v);
  else if (key == "maxp_depth") maxp_depth = parse_positive(key, v);
  else if (key == "shards") shards = parse_positive(key, v);
  else if (key == "threads") threads = parse_positive(key, v);
  else if (key == "quote_pairing_window") quote_pairing_window = parse_positive(key, v);
  else if (key == "include_references_in_substring_check") {
    include_references_in_substring_check = parse_bool(key, v);
  } else if (key == "micro_average") micro_average = parse_bool(key, v);
  else if (key == "reporters") reporters = v;
  else throw ConfigError(std::string(key), "unknown configuration key");
}

void PipelineConfig::validate() const {
  if (chunk_stride > chunk_window) {
    throw ConfigError("chunk_stride", "must not exceed chunk_window");
  }
}

PipelineConfig PipelineConfig::parse(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    const std::string content = trim(sv);
    if (content.empty()) continue;
    if (content.front() == '[') continue;  // section headers are ignored
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(content, "line " + std::to_string(lineno) +
                                     ": expected key = value");
    }
    cfg.set(trim(std::string_view(content).substr(0, eq)),
            std::string_view(content).substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  return parse(in);
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  return {
      {"chunk_window", std::to_string(chunk_window)},
      {"chunk_stride", std::to_string(chunk_stride)},
      {"query_window", std::to_string(query_window)},
      {"view", view},
      {"kind", kind},
      {"bm25_k1", format_double(bm25_k1)},
      {"bm25_b", format_double(bm25_b)},
      {"ngram_n", std::to_string(ngram_n)},
      {"seed", std::to_string(seed)},
      {"salient_k", std::to_string(salient_k)},
      {"word_budget", std::to_string(word_budget)},
      {"k", std::to_string(k)},
      {"maxp_depth", std::to_string(maxp_depth)},
      {"shards", std::to_string(shards)},
      {"threads", std::to_string(threads)},
      {"quote_pairing_window", std::to_string(quote_pairing_window)},
      {"include_references_in_substring_check",
       include_references_in_substring_check ? "true" : "false"},
      {"micro_average", micro_average ? "true" : "false"},
      {"reporters", reporters},
  };
}

std::string PipelineConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : entries()) {
    if (k == "threads") continue;
    canon += k + "=" + v + "\n";
  }
  return sha256_hex(canon);
}

// ---- CLI ----

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input " + path);
  return in;
}

// Outputs are written to temporary siblings and renamed on commit; without a
// commit every temporary file is removed.
class OutputFiles {
 public:
  OutputFiles() = default;
  OutputFiles(const OutputFiles&) = delete;
  OutputFiles& operator=(const OutputFiles&) = delete;

  ~OutputFiles() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f.tmp, ec);
  }

  std::ofstream& open(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    File f;
    f.path = path;
    f.tmp = path + ".tmp";
    f.stream = std::make_unique<std::ofstream>(f.tmp, std::ios::binary | std::ios::trunc);
    if (!*f.stream) throw DataError("cannot write " + path);
    files_.push_back(std::move(f));
    return *files_.back().stream;
  }

  /// Closes every stream; returns (final path, sha256) pairs.
  std::vector<std::pair<std::string, std::string>> close_all() {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto& f : files_) {
      if (f.stream) {
        f.stream->flush();
        if (!*f.stream) throw DataError("write failed: " + f.path);
        f.stream->close();
        f.stream.reset();
      }
      out.emplace_back(f.path, sha256_file(f.tmp));
    }
    return out;
  }

  void commit() {
    close_all();
    for (const auto& f : files_) fs::rename(f.tmp, f.path);
    committed_ = true;
  }

 private:
  struct File {
    std::string path;
    std::string tmp;
    std::unique_ptr<std::ofstream> stream;
  };
  std::vector<File> files_;
  bool committed_ = false;
};

std::string base_name(const std::string& path) {
  return fs::path(path).filename().string();
}

struct Manifest {
  std::string subcommand;
  std::vector<std::string> inputs;
  json counts = json::object();
  json skips = json::object();
  json notes = json::object();
};

// Writes `<manifest_path>` recording config, input and output hashes.
void write_manifest(OutputFiles& files, const std::string& manifest_path,
                    const Manifest& m, const PipelineConfig& cfg) {
  const auto outputs = files.close_all();
  json j;
  j["tool"] = "clerc";
  j["format_version"] = 1;
  j["subcommand"] = m.subcommand;
  json config = json::object();
  for (const auto& [k, v] : cfg.entries()) {
    if (k != "threads") config[k] = v;
  }
  j["config"] = config;
  j["config_hash"] = cfg.hash();
  json inputs = json::object();
  for (const auto& p : m.inputs) inputs[base_name(p)] = sha256_file(p);
  j["inputs"] = inputs;
  json outs = json::object();
  for (const auto& [p, h] : outputs) outs[base_name(p)] = h;
  j["outputs"] = outs;
  j["counts"] = m.counts;
  j["skips"] = m.skips;
  if (!m.notes.empty()) j["notes"] = m.notes;
  files.open(manifest_path) << j.dump(2) << '\n';
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || v == 0) {
      throw UsageError(std::string(what) + ": bad value '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

CitationParser make_parser(const PipelineConfig& cfg) {
  ReporterTable table = ReporterTable::defaults();
  if (!cfg.reporters.empty()) {
    auto in = open_input(cfg.reporters);
    table = ReporterTable::from_json(in);
  }
  CitationParserOptions opts;
  opts.quote_pairing_window = cfg.quote_pairing_window;
  return CitationParser(std::move(table), opts);
}

std::vector<CaseDocument> load_documents(const std::string& path) {
  auto in = open_input(path);
  return read_documents(in);
}

bool keep_kind(const PipelineConfig& cfg, QueryKind kind) {
  return cfg.kind == "all" || cfg.kind == to_string(kind);
}

std::map<std::string, std::size_t> passage_counts(
    std::span<const CaseDocument> docs, const PipelineConfig& cfg) {
  std::map<std::string, std::size_t> out;
  for (const auto& d : docs) {
    out[d.doc_id] = chunk_document(d, cfg.chunk_window, cfg.chunk_stride).size();
  }
  return out;
}

struct Context {
  PipelineConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

// ---- subcommands ----

int cmd_ingest(Context& c, const std::string& input, const std::string& output) {
  auto in = open_input(input);
  LoadResult loaded = load_corpus(in);
  for (const auto& d : loaded.rejected) {
    c.err << "rejected line " << d.line << " (" << d.record_id << "): " << d.message << '\n';
  }
  std::size_t paragraphs = 0;
  for (const auto& d : loaded.documents) paragraphs += d.paragraphs.size();

  OutputFiles files;
  write_documents(files.open(output), loaded.documents);
  Manifest m;
  m.subcommand = "ingest";
  m.inputs = {input};
  m.counts = {{"records", loaded.documents.size() + loaded.rejected.size()},
              {"documents", loaded.documents.size()},
              {"paragraphs", paragraphs}};
  m.skips = {{"rejected_records", loaded.rejected.size()}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "ingested " << loaded.documents.size() << " documents, rejected "
        << loaded.rejected.size() << '\n';
  return 0;
}

int cmd_chunk(Context& c, const std::string& input, const std::string& output) {
  const auto docs = load_documents(input);
  OutputFiles files;
  auto& os = files.open(output);
  std::size_t total = 0;
  for (const auto& d : docs) {
    const auto ps = chunk_document(d, c.cfg.chunk_window, c.cfg.chunk_stride);
    write_passages(os, ps);
    total += ps.size();
  }
  Manifest m;
  m.subcommand = "chunk";
  m.inputs = {input};
  m.counts = {{"documents", docs.size()}, {"passages", total}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "wrote " << total << " passages\n";
  return 0;
}

int cmd_parse_citations(Context& c, const std::string& input,
                        const std::string& output, const std::string& quotes_out,
                        const std::string& labels) {
  const auto docs = load_documents(input);
  const CitationParser parser = make_parser(c.cfg);
  OutputFiles files;
  auto& os = files.open(output);
  std::ofstream* qs = quotes_out.empty() ? nullptr : &files.open(quotes_out);
  std::size_t n_case = 0, n_statute = 0, n_short = 0, n_unresolved = 0;
  std::size_t n_quotes = 0, n_paired = 0;
  for (const auto& d : docs) {
    const auto spans = parser.parse(d.text);
    for (const auto& s : spans) {
      json j;
      j["doc_id"] = d.doc_id;
      j["start"] = s.start;
      j["end"] = s.end;
      j["kind"] = to_string(s.kind);
      j["key"] = s.key ? json(s.key->to_string()) : json(nullptr);
      j["raw"] = s.raw;
      if (s.kind != CitationKind::statute && s.key) j["group"] = s.group;
      if (s.pincite) j["pincite"] = *s.pincite;
      os << j.dump() << '\n';
      if (s.kind == CitationKind::case_citation) ++n_case;
      if (s.kind == CitationKind::statute) ++n_statute;
      if (s.kind == CitationKind::short_form) {
        ++n_short;
        if (!s.key) ++n_unresolved;
      }
    }
    const auto quotes = parser.extract_direct_quotes(d.text, spans);
    for (const auto& q : quotes) {
      ++n_quotes;
      if (q.paired_citation) ++n_paired;
      if (!qs) continue;
      json j;
      j["query_id"] = d.doc_id + "_q" + std::to_string(q.start);
      j["doc_id"] = d.doc_id;
      j["start"] = q.start;
      j["end"] = q.end;
      j["quote"] = q.text;
      j["paired_key"] = q.paired_citation && q.paired_citation->key
                            ? json(q.paired_citation->key->to_string())
                            : json(nullptr);
      *qs << j.dump() << '\n';
    }
  }
  Manifest m;
  m.subcommand = "parse-citations";
  m.inputs = {input};
  m.counts = {{"documents", docs.size()}, {"case_citations", n_case},
              {"statute_citations", n_statute}, {"short_forms", n_short},
              {"direct_quotes", n_quotes}, {"paired_quotes", n_paired}};
  m.skips = {{"unresolved_short_forms", n_unresolved}};
  if (!labels.empty()) {
    auto in = open_input(labels);
    const auto sample = read_labeled_sentences(in);
    const auto acc = evaluate_sentence_extraction(parser, sample);
    m.inputs.push_back(labels);
    m.counts["sentence_sample"] = acc.total;
    m.counts["sentence_correct"] = acc.correct;
    m.counts["sentence_accuracy"] = acc.accuracy();
    m.skips["sentence_bounds_failed"] = acc.failures;
    c.out << "citation-sentence accuracy: " << acc.correct << "/" << acc.total << '\n';
  }
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "case " << n_case << ", statute " << n_statute << ", short-form "
        << n_short << ", quotes " << n_quotes << '\n';
  return 0;
}

json report_json(const ConstructionReport& r) {
  return {{"sentence_bounds_failed", r.sentence_failures},
          {"target_not_in_corpus", r.target_not_in_corpus},
          {"unresolvable_key", r.unresolvable_keys},
          {"sentence_failure_rate", r.sentence_failure_rate()}};
}

struct BuiltQueries {
  std::vector<RetrievalQuery> queries;  // after kind filtering
  ConstructionReport report;
  std::size_t key_conflicts = 0;
};

BuiltQueries build_all_queries(Context& c, std::span<const CaseDocument> docs,
                               const CitationParser& parser, QueryView view,
                               std::size_t window) {
  const CorpusKeyIndex keys = CorpusKeyIndex::build(docs, parser);
  for (const auto& conflict : keys.conflicts()) {
    c.err << "duplicate reporter citation " << conflict.key.to_string() << ": kept "
          << conflict.kept_doc_id << ", dropped " << conflict.dropped_doc_id << '\n';
  }
  const QueryBuilder builder(parser, keys);
  std::vector<std::vector<RetrievalQuery>> per_doc(docs.size());
  std::vector<ConstructionReport> reports(docs.size());
  parallel_for(docs.size(), c.cfg.threads, [&](std::size_t i) {
    per_doc[i] = builder.build_queries(docs[i], view, window, reports[i]);
  });
  BuiltQueries out;
  out.key_conflicts = keys.conflicts().size();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.report += reports[i];
    for (auto& q : per_doc[i]) {
      if (keep_kind(c.cfg, q.kind)) out.queries.push_back(std::move(q));
    }
  }
  return out;
}

int cmd_build_queries(Context& c, const std::string& input, const std::string& output,
                      const std::string& qrels_out, const std::string& pqrels_out) {
  const auto docs = load_documents(input);
  const CitationParser parser = make_parser(c.cfg);
  const QueryView view = query_view_from_string(c.cfg.view);
  BuiltQueries built = build_all_queries(c, docs, parser, view, c.cfg.query_window);

  OutputFiles files;
  write_queries(files.open(output), built.queries);
  const auto qrels = emit_doc_qrels(built.queries);
  write_qrels(files.open(qrels_out), qrels);
  std::size_t passage_rows = 0;
  if (!pqrels_out.empty()) {
    const auto pq = emit_passage_qrels(built.queries, passage_counts(docs, c.cfg));
    passage_rows = pq.size();
    write_qrels(files.open(pqrels_out), pq);
  }
  std::size_t residual = 0;
  for (const auto& q : built.queries) residual += q.residual_short_forms;

  Manifest m;
  m.subcommand = "build-queries";
  m.inputs = {input};
  m.counts = {{"documents", docs.size()},
              {"candidates", built.report.candidates},
              {"built", built.report.built},
              {"direct", built.report.direct},
              {"indirect", built.report.indirect},
              {"emitted", built.queries.size()},
              {"qrels_rows", qrels.size()},
              {"passage_qrels_rows", passage_rows},
              {"residual_short_forms", residual}};
  m.skips = report_json(built.report);
  m.skips["reporter_cite_conflicts"] = built.key_conflicts;
  m.notes = {{"window_counts_sentence", false},
             {"passage_relevance", "inherited from the cited document"},
             {"target", "first resolvable key of the central citation's parallel group"}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "emitted " << built.queries.size() << " queries (" << built.report.direct
        << " direct, " << built.report.indirect << " indirect before filtering); "
        << "sentence failure rate " << built.report.sentence_failure_rate() << '\n';
  return 0;
}

int cmd_sweep(Context& c, const std::string& input, const std::string& out_dir,
              const std::string& lengths_arg) {
  const auto docs = load_documents(input);
  const CitationParser parser = make_parser(c.cfg);
  const QueryView view = query_view_from_string(c.cfg.view);
  const auto lengths = parse_size_list(lengths_arg, "--lengths");

  OutputFiles files;
  Manifest m;
  m.subcommand = "sweep-lengths";
  m.inputs = {input};
  json per_length = json::object();
  for (std::size_t len : lengths) {
    BuiltQueries built = build_all_queries(c, docs, parser, view, len);
    const std::string stem = (fs::path(out_dir) / ("queries_" + std::to_string(len))).string();
    write_queries(files.open(stem + ".jsonl"), built.queries);
    write_qrels(files.open((fs::path(out_dir) / ("qrels_" + std::to_string(len) + ".txt")).string()),
                emit_doc_qrels(built.queries));
    per_length[std::to_string(len)] = {{"emitted", built.queries.size()},
                                       {"built", built.report.built}};
    if (len == lengths.front()) m.skips = report_json(built.report);
  }
  m.counts = {{"documents", docs.size()}, {"lengths", per_length}};
  write_manifest(files, (fs::path(out_dir) / "manifest.json").string(), m, c.cfg);
  files.commit();
  c.out << "wrote " << lengths.size() << " query sets to " << out_dir << '\n';
  return 0;
}

InvertedIndex build_passage_index(const std::vector<Passage>& passages,
                                  const PipelineConfig& cfg) {
  std::vector<Unit> units;
  units.reserve(passages.size());
  for (const auto& p : passages) units.push_back({p.passage_id, p.text});
  IndexBuildOptions opts;
  opts.shards = cfg.shards;
  opts.threads = cfg.threads;
  return InvertedIndex::build(units, UnitKind::passage, opts);
}

int cmd_build_genset(Context& c, const std::string& input, const std::string& output) {
  const auto docs = load_documents(input);
  if (docs.empty()) throw DataError("no documents in " + input);
  const CitationParser parser = make_parser(c.cfg);
  const CorpusKeyIndex keys = CorpusKeyIndex::build(docs, parser);
  std::vector<Passage> passages;
  for (const auto& d : docs) {
    auto ps = chunk_document(d, c.cfg.chunk_window, c.cfg.chunk_stride);
    std::move(ps.begin(), ps.end(), std::back_inserter(passages));
  }
  const InvertedIndex index = build_passage_index(passages, c.cfg);
  GensetOptions opts;
  opts.salient_k = c.cfg.salient_k;
  opts.word_budget = c.cfg.word_budget;
  opts.seed = c.cfg.seed;
  opts.chunk_window = c.cfg.chunk_window;
  opts.chunk_stride = c.cfg.chunk_stride;
  opts.bm25 = {c.cfg.bm25_k1, c.cfg.bm25_b};
  const GensetBuilder builder(parser, keys, docs, index, opts);
  GensetReport report;
  const auto instances = builder.build(docs, report, c.cfg.threads);
  for (const auto& d : report.diagnostics) c.err << "skipped " << d << '\n';

  OutputFiles files;
  write_genset(files.open(output), instances);
  Manifest m;
  m.subcommand = "build-genset";
  m.inputs = {input};
  m.counts = {{"documents", report.documents}, {"instances", report.built}};
  m.skips = {{"no_eligible_paragraph", report.without_eligible_paragraph},
             {"fewer_than_two_resolvable", report.skipped_unresolvable}};
  m.notes = {{"salience", "bm25 over passages, gold paragraph as query"},
             {"instances_per_document", 1}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "built " << report.built << " generation instances from "
        << report.documents << " documents\n";
  return 0;
}

int cmd_index(Context& c, const std::string& input, const std::string& output,
              const std::string& unit) {
  const UnitKind kind = unit_kind_from_string(unit);
  std::vector<Unit> units;
  if (kind == UnitKind::passage) {
    auto in = open_input(input);
    for (auto& p : read_passages(in)) units.push_back({std::move(p.passage_id), std::move(p.text)});
  } else {
    for (auto& d : load_documents(input)) units.push_back({std::move(d.doc_id), std::move(d.text)});
  }
  if (units.empty()) throw DataError("no units in " + input);
  IndexBuildOptions opts;
  opts.shards = c.cfg.shards;
  opts.threads = c.cfg.threads;
  const InvertedIndex index = InvertedIndex::build(units, kind, opts);
  OutputFiles files;
  index.save(files.open(output));
  Manifest m;
  m.subcommand = "index";
  m.inputs = {input};
  m.counts = {{"units", index.size()}, {"terms", index.vocabulary_size()},
              {"unit_kind", to_string(kind)}, {"format_version", InvertedIndex::kIndexFormatVersion}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "indexed " << index.size() << " " << to_string(kind) << "s, "
        << index.vocabulary_size() << " terms\n";
  return 0;
}

int cmd_search(Context& c, const std::string& index_path, const std::string& queries_path,
               const std::string& output, bool maxp, bool exclude_source, std::string tag) {
  auto idx_in = open_input(index_path);
  const InvertedIndex index = InvertedIndex::load(idx_in);
  if (maxp && index.kind() != UnitKind::passage) {
    throw UsageError("--maxp needs a passage index");
  }
  auto q_in = open_input(queries_path);
  const auto queries = read_queries(q_in);
  std::vector<std::pair<std::string, std::string>> batch;
  for (const auto& q : queries) batch.emplace_back(q.query_id, q.masked_text);
  const Bm25Params params{c.cfg.bm25_k1, c.cfg.bm25_b};
  const std::size_t depth =
      maxp || exclude_source ? std::max(c.cfg.k, c.cfg.maxp_depth) : c.cfg.k;
  auto runs = bm25_search_batch(index, batch, depth, params, c.cfg.threads);
  std::size_t excluded = 0;
  if (exclude_source) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      auto& e = runs[i].entries;
      const std::string& src = queries[i].doc_id;
      const auto before = e.size();
      e.erase(std::remove_if(e.begin(), e.end(),
                             [&](const RankedEntry& x) { return doc_of_passage(x.unit_id) == src; }),
              e.end());
      excluded += before - e.size();
      if (!maxp && e.size() > c.cfg.k) e.resize(c.cfg.k);
      for (std::size_t r = 0; r < e.size(); ++r) e[r].rank = r + 1;
    }
  }
  if (maxp) {
    for (auto& r : runs) r = aggregate_maxp(r, c.cfg.k);
  }
  if (tag.empty()) tag = maxp ? "bm25-maxp" : "bm25";
  if (exclude_source) tag += "-nosrc";
  OutputFiles files;
  write_trec_run(files.open(output), runs, tag);
  std::size_t empty_runs = 0, lines = 0;
  for (const auto& r : runs) {
    if (r.entries.empty()) ++empty_runs;
    lines += r.entries.size();
  }
  Manifest m;
  m.subcommand = "search";
  m.inputs = {index_path, queries_path};
  m.counts = {{"queries", runs.size()}, {"run_lines", lines},
              {"aggregation", maxp ? "maxp" : "none"},
              {"unit_kind", to_string(maxp ? UnitKind::document : index.kind())},
              {"source_excluded", exclude_source}};
  m.skips = {{"queries_without_hits", empty_runs}, {"source_units_removed", excluded}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "searched " << runs.size() << " queries\n";
  return 0;
}

int cmd_search_quotes(Context& c, const std::string& input, const std::string& unit,
                      const std::string& quotes_path, const std::string& output,
                      const std::string& method) {
  if (method != "exact" && method != "ngram") {
    throw UsageError("--method must be exact or ngram");
  }
  const UnitKind kind = unit_kind_from_string(unit);
  std::vector<Unit> units;
  if (kind == UnitKind::passage) {
    auto in = open_input(input);
    for (auto& p : read_passages(in)) units.push_back({std::move(p.passage_id), std::move(p.text)});
  } else {
    for (auto& d : load_documents(input)) units.push_back({std::move(d.doc_id), std::move(d.text)});
  }
  std::vector<std::pair<std::string, std::string>> quotes;
  {
    auto in = open_input(quotes_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        const json j = json::parse(line);
        quotes.emplace_back(j.at("query_id").get<std::string>(),
                            j.at("quote").get<std::string>());
      } catch (const json::exception& e) {
        throw DataError("quotes line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  const QuoteRetriever retriever(std::move(units), {c.cfg.ngram_n});
  std::vector<RankedList> runs;
  std::size_t rejected = 0;
  for (const auto& [qid, quote] : quotes) {
    if (trim(quote).empty()) {
      ++rejected;
      c.err << "skipped empty quote " << qid << '\n';
      continue;
    }
    if (method == "exact") {
      RankedList r;
      r.query_id = qid;
      r.k = c.cfg.k;
      for (const auto& id : retriever.exact_match_search(quote)) {
        if (r.entries.size() >= c.cfg.k) break;
        r.entries.push_back({id, 1.0, r.entries.size() + 1});
      }
      runs.push_back(std::move(r));
    } else {
      runs.push_back(retriever.ngram_search(quote, c.cfg.ngram_n, c.cfg.k, qid));
    }
  }
  const std::string tag = method == "exact" ? "exact" : std::to_string(c.cfg.ngram_n) + "-gram";
  OutputFiles files;
  write_trec_run(files.open(output), runs, tag);
  Manifest m;
  m.subcommand = "search-quotes";
  m.inputs = {input, quotes_path};
  m.counts = {{"quotes", quotes.size()}, {"searched", runs.size()}, {"method", tag}};
  m.skips = {{"empty_quotes", rejected}};
  write_manifest(files, output + ".manifest.json", m, c.cfg);
  files.commit();
  c.out << "searched " << runs.size() << " quotes with " << tag << '\n';
  return 0;
}

int cmd_eval_retrieval(Context& c, const std::string& run_path, const std::string& qrels_path,
                       const std::string& ks_arg, std::size_t ndcg_k,
                       const std::string& output) {
  const auto ks = parse_size_list(ks_arg, "--k");
  auto run_in = open_input(run_path);
  const auto run = read_trec_run(run_in);
  auto q_in = open_input(qrels_path);
  const auto qrels = read_qrels(q_in);
  const RetrievalReport report = evaluate_run(run, qrels, ks, ndcg_k);
  c.out << retrieval_report_table(report);
  if (!output.empty()) {
    OutputFiles files;
    files.open(output) << retrieval_report_json(report);
    Manifest m;
    m.subcommand = "eval-retrieval";
    m.inputs = {run_path, qrels_path};
    m.counts = {{"scored", report.scored}};
    m.skips = {{"missing_from_run", report.missing_from_run},
               {"unjudged_run_queries", report.unjudged.size()}};
    write_manifest(files, output + ".manifest.json", m, c.cfg);
    files.commit();
  }
  return 0;
}

int cmd_eval_generation(Context& c, const std::string& genset_path,
                        const std::string& gens_path, const std::string& without_path,
                        const std::string& output) {
  auto g_in = open_input(genset_path);
  const auto instances = read_genset(g_in);
  auto w_in = open_input(gens_path);
  const auto gens = read_generations(w_in);
  const CitationParser parser = make_parser(c.cfg);
  GenerationScoreOptions opts;
  opts.micro = c.cfg.micro_average;
  opts.include_references_in_substring_check = c.cfg.include_references_in_substring_check;
  const auto with_scores = score_generation_run(instances, gens, parser, opts);

  std::optional<RunComparison> cmp;
  if (!without_path.empty()) {
    auto wo_in = open_input(without_path);
    const auto wo = read_generations(wo_in);
    GenerationScoreOptions wo_opts = opts;
    wo_opts.include_references_in_substring_check = false;
    const auto without_scores = score_generation_run(instances, wo, parser, wo_opts);
    cmp = compare_runs(with_scores, without_scores);
  }
  for (const auto& s : with_scores) {
    for (const auto& id : s.unmatched_ids) {
      c.err << s.system << ": unmatched instance id " << id << '\n';
    }
    if (!s.missing_ids.empty()) {
      c.err << s.system << ": " << s.missing_ids.size() << " instance(s) without output\n";
    }
  }
  c.out << generation_report_table(with_scores, cmp ? &*cmp : nullptr);
  if (!output.empty()) {
    OutputFiles files;
    files.open(output) << generation_report_json(with_scores, cmp ? &*cmp : nullptr);
    Manifest m;
    m.subcommand = "eval-generation";
    m.inputs = {genset_path, gens_path};
    if (!without_path.empty()) m.inputs.push_back(without_path);
    std::size_t scored = 0, missing = 0, unmatched = 0, degenerate = 0;
    for (const auto& s : with_scores) {
      scored += s.per_instance.size();
      missing += s.missing_ids.size();
      unmatched += s.unmatched_ids.size();
      degenerate += s.degenerate_citations;
    }
    m.counts = {{"systems", with_scores.size()}, {"scored", scored}};
    m.skips = {{"missing_outputs", missing}, {"unmatched_ids", unmatched},
               {"no_generated_citations", degenerate}};
    write_manifest(files, output + ".manifest.json", m, c.cfg);
    files.commit();
  }
  return 0;
}

int cmd_density(Context& c, const std::string& input, const std::string& output) {
  const auto docs = load_documents(input);
  if (docs.empty()) throw DataError("no documents in " + input);
  const CitationParser parser = make_parser(c.cfg);
  const DensityProfile prof = citation_density_profile(docs, parser);
  json j;
  j["densities"] = prof.densities;
  j["words"] = prof.words;
  j["citations"] = prof.citations;
  j["total_words"] = prof.total_words;
  for (std::size_t d = 0; d < 10; ++d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "decile %2zu  %8.4f  (%zu citations / %zu words)\n",
                  d + 1, prof.densities[d], prof.citations[d], prof.words[d]);
    c.out << buf;
  }
  if (!output.empty()) {
    OutputFiles files;
    files.open(output) << j.dump(2) << '\n';
    Manifest m;
    m.subcommand = "density";
    m.inputs = {input};
    m.counts = {{"documents", docs.size()}, {"total_words", prof.total_words}};
    write_manifest(files, output + ".manifest.json", m, c.cfg);
    files.commit();
  }
  return 0;
}

double mean_words(const std::vector<std::size_t>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (auto x : v) s += static_cast<double>(x);
  return s / static_cast<double>(v.size());
}

int cmd_stats(Context& c, const std::string& input, const std::string& queries_path,
              const std::string& genset_path, const std::string& output) {
  const auto docs = load_documents(input);
  std::vector<std::size_t> doc_words, passage_words;
  for (const auto& d : docs) {
    doc_words.push_back(count_words(d.text));
    for (const auto& p : chunk_document(d, c.cfg.chunk_window, c.cfg.chunk_stride)) {
      passage_words.push_back(p.word_end - p.word_start);
    }
  }
  json j;
  j["documents"] = {{"count", docs.size()}, {"avg_words", mean_words(doc_words)}};
  j["passages"] = {{"count", passage_words.size()}, {"avg_words", mean_words(passage_words)}};
  Manifest m;
  m.subcommand = "stats";
  m.inputs = {input};
  if (!queries_path.empty()) {
    auto in = open_input(queries_path);
    const auto qs = read_queries(in);
    std::vector<std::size_t> w;
    std::size_t direct = 0;
    for (const auto& q : qs) {
      w.push_back(count_words(q.masked_text));
      if (q.kind == QueryKind::direct) ++direct;
    }
    j["queries"] = {{"count", qs.size()}, {"avg_words", mean_words(w)}, {"direct", direct}};
    m.inputs.push_back(queries_path);
  }
  if (!genset_path.empty()) {
    auto in = open_input(genset_path);
    const auto gs = read_genset(in);
    std::vector<std::size_t> w;
    for (const auto& g : gs) w.push_back(count_words(g.prompt_with_refs));
    j["generation"] = {{"count", gs.size()}, {"avg_words", mean_words(w)}};
    m.inputs.push_back(genset_path);
  }
  c.out << j.dump(2) << '\n';
  if (!output.empty()) {
    OutputFiles files;
    files.open(output) << j.dump(2) << '\n';
    m.subcommand = "stats";
    m.counts = j;
    write_manifest(files, output + ".manifest.json", m, c.cfg);
    files.commit();
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Case-law retrieval and generation benchmark toolkit", "clerc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config_path;
  std::map<std::string, std::string> overrides;
  auto cfg_option = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                        const std::string& desc) {
    sub->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, desc);
  };

  app.add_option("--config", config_path, "Configuration file (key = value)");
  cfg_option(&app, "--threads", "threads", "Worker threads");
  cfg_option(&app, "--seed", "seed", "Random seed");

  std::string input, output, qrels, pqrels, quotes, labels, out_dir, lengths = "100,200,300,400,500,600,700,800,900,1000";
  std::string unit = "passage", index_path, queries_path, tag, method = "ngram";
  std::string run_path, genset_path, gens_path, without_path, ks = "10,100,1000";
  std::size_t ndcg_k = 10;
  bool maxp = false;
  bool exclude_source = false;

  auto* ingest = app.add_subcommand("ingest", "Normalize corpus records into documents");
  ingest->add_option("--input", input, "Corpus JSONL")->required();
  ingest->add_option("--output", output, "Documents JSONL")->required();

  auto* chunk = app.add_subcommand("chunk", "Split documents into passages");
  chunk->add_option("--input", input, "Documents JSONL")->required();
  chunk->add_option("--output", output, "Passages JSONL")->required();
  cfg_option(chunk, "--window", "chunk_window", "Words per passage");
  cfg_option(chunk, "--stride", "chunk_stride", "Words between passage starts");

  auto* parse = app.add_subcommand("parse-citations", "Dump citations and direct quotes");
  parse->add_option("--input", input, "Documents JSONL")->required();
  parse->add_option("--output", output, "Citation dump JSONL")->required();
  parse->add_option("--quotes", quotes, "Direct quotes JSONL");
  parse->add_option("--labels", labels, "Labeled citation sentences for accuracy");

  auto* bq = app.add_subcommand("build-queries", "Build retrieval queries and qrels");
  bq->add_option("--input", input, "Documents JSONL")->required();
  bq->add_option("--output", output, "Queries JSONL")->required();
  bq->add_option("--qrels", qrels, "Document-level qrels")->required();
  bq->add_option("--passage-qrels", pqrels, "Passage-level qrels");
  cfg_option(bq, "--view", "view", "single-removed or all-removed");
  cfg_option(bq, "--kind", "kind", "direct, indirect or all");
  cfg_option(bq, "--window", "query_window", "Context words around the citation sentence");

  auto* sweep = app.add_subcommand("sweep-lengths", "Build query sets for several window lengths");
  sweep->add_option("--input", input, "Documents JSONL")->required();
  sweep->add_option("--output-dir", out_dir, "Output directory")->required();
  sweep->add_option("--lengths", lengths, "Comma-separated window lengths");
  cfg_option(sweep, "--view", "view", "single-removed or all-removed");
  cfg_option(sweep, "--kind", "kind", "direct, indirect or all");

  auto* genset = app.add_subcommand("build-genset", "Build generation instances and prompts");
  genset->add_option("--input", input, "Documents JSONL")->required();
  genset->add_option("--output", output, "Generation set JSONL")->required();
  cfg_option(genset, "--salient-k", "salient_k", "Passages per cited case");
  cfg_option(genset, "--word-budget", "word_budget", "Total reference words");

  auto* index = app.add_subcommand("index", "Build a BM25 index");
  index->add_option("--input", input, "Passages or documents JSONL")->required();
  index->add_option("--output", output, "Index file")->required();
  index->add_option("--unit", unit, "passage or document");
  cfg_option(index, "--shards", "shards", "Index shards");

  auto* search = app.add_subcommand("search", "BM25 search over queries");
  search->add_option("--index", index_path, "Index file")->required();
  search->add_option("--queries", queries_path, "Queries JSONL")->required();
  search->add_option("--output", output, "TREC run file")->required();
  search->add_flag("--maxp", maxp, "Aggregate passages to documents by maximum score");
  search->add_flag("--exclude-source", exclude_source,
                   "Drop units of the document the query was taken from");
  search->add_option("--tag", tag, "Run tag");
  cfg_option(search, "--k", "k", "Results per query");

  auto* sq = app.add_subcommand("search-quotes", "Exact or n-gram search for direct quotes");
  sq->add_option("--input", input, "Passages or documents JSONL")->required();
  sq->add_option("--unit", unit, "passage or document");
  sq->add_option("--quotes", quotes, "Quotes JSONL {query_id, quote}")->required();
  sq->add_option("--output", output, "TREC run file")->required();
  sq->add_option("--method", method, "exact or ngram");
  cfg_option(sq, "--n", "ngram_n", "n-gram size");
  cfg_option(sq, "--k", "k", "Results per quote");

  auto* er = app.add_subcommand("eval-retrieval", "Recall@k and nDCG@k of a run");
  er->add_option("run", run_path, "TREC run file")->required();
  er->add_option("qrels", qrels, "Qrels file")->required();
  er->add_option("--k", ks, "Comma-separated recall cutoffs");
  er->add_option("--ndcg-k", ndcg_k, "nDCG cutoff");
  er->add_option("--output", output, "JSON report");

  auto* eg = app.add_subcommand("eval-generation", "ROUGE and citation metrics of generations");
  eg->add_option("--genset", genset_path, "Generation set JSONL")->required();
  eg->add_option("--generations", gens_path, "Generations JSONL (with references)")->required();
  eg->add_option("--without-refs", without_path, "Generations JSONL (without references)");
  eg->add_option("--output", output, "JSON report");
  eg->add_flag_function("--micro", [&](std::int64_t) { overrides["micro_average"] = "true"; },
                        "Pool citation counts across instances");
  eg->add_flag_function("--include-refs",
                        [&](std::int64_t) {
                          overrides["include_references_in_substring_check"] = "true";
                        },
                        "Count citations found in reference texts as grounded");

  auto* density = app.add_subcommand("density", "Citation density by paragraph decile");
  density->add_option("--input", input, "Documents JSONL")->required();
  density->add_option("--output", output, "JSON profile");

  auto* stats = app.add_subcommand("stats", "Corpus, query and generation-set counts");
  stats->add_option("--input", input, "Documents JSONL")->required();
  stats->add_option("--queries", queries_path, "Queries JSONL");
  stats->add_option("--genset", genset_path, "Generation set JSONL");
  stats->add_option("--output", output, "JSON stats");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = PipelineConfig::from_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();
    Context c{cfg, out, err};

    if (*ingest) return cmd_ingest(c, input, output);
    if (*chunk) return cmd_chunk(c, input, output);
    if (*parse) return cmd_parse_citations(c, input, output, quotes, labels);
    if (*bq) return cmd_build_queries(c, input, output, qrels, pqrels);
    if (*sweep) return cmd_sweep(c, input, out_dir, lengths);
    if (*genset) return cmd_build_genset(c, input, output);
    if (*index) return cmd_index(c, input, output, unit);
    if (*search) return cmd_search(c, index_path, queries_path, output, maxp, exclude_source, tag);
    if (*sq) return cmd_search_quotes(c, input, unit, quotes, output, method);
    if (*er) return cmd_eval_retrieval(c, run_path, qrels, ks, ndcg_k, output);
    if (*eg) return cmd_eval_generation(c, genset_path, gens_path, without_path, output);
    if (*density) return cmd_density(c, input, output);
    if (*stats) return cmd_stats(c, input, queries_path, genset_path, output);
    err << "error: no subcommand\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.key() << ": " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace clerc
