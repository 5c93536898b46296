// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/resource.h>
#include <unistd.h>

#include "clerc/citation.hpp"
#include "clerc/corpus.hpp"
#include "clerc/genset.hpp"
#include "clerc/metrics.hpp"
#include "clerc/pipeline.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"
#include "clerc/text.hpp"

using namespace clerc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string frac(const Fraction& f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

std::string join_words(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<CaseDocument> load_mini_corpus() {
  std::ifstream in(std::string(CLERC_DATA_DIR) + "/mini_corpus.jsonl");
  if (!in) throw std::runtime_error("cannot open mini corpus");
  return load_corpus(in).documents;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1: citation metrics on the hallucination example ----

Outcome citation_metrics_example() {
  const auto t0 = Clock::now();
  const CitationParser parser;
  auto key = [&](std::string_view s) { return *parser.parse_key(s); };
  // Generated citations in order of appearance; "101 S.Ct. 173" is scored
  // on its own as in the example's tally.
  const std::vector<CitationKey> generated = {key("404 U.S. 519"), key("449 U.S. 5"),
                                              key("101 S.Ct. 173"), key("748 F.2d 1142"),
                                              key("429 U.S. 97")};
  const std::vector<CitationKey> relevant = {key("449 U.S. 5"), key("748 F.2d 1142"),
                                             key("429 U.S. 97"), key("953 F.2d 1073")};
  const std::vector<std::string> prefix = {
      "The City moves to dismiss the pro se complaint filed by Mr. Cleaves for failure to "
      "state a claim upon which relief can be granted."};
  const std::vector<std::string> references = {
      "purports to justify or explain the segregation of petitioner for two days in advance "
      "of the disciplinary hearing. II Petitioner's complaint, like most prisoner complaints "
      "filed in the Northern District of Illinois, was not prepared by counsel. It is settled "
      "law that the allegations of such a complaint, \xE2\x80\x9Chowever inartfully pleaded'' "
      "are held \xE2\x80\x9Cto less stringent standards than formal pleadings drafted by "
      "lawyers ....'' Haines v. Kerner, 404 U. S. 519, 520 (1972). See also Maclin v. "
      "Paulson, 627 F. 2d 83, 86 (CA7 1980); French v. Heyne, 547 F. 2d 994, 996 (CA7 1976).",
      "magistrate erred in applying the deliberate indifference standard in dismissing this "
      "complaint. III. Our inquiry turns, therefore, to the question of whether Matzker "
      "stated a cause of action when judged under due process standards. A complaint drafted "
      "by a pro se litigant \xE2\x80\x9Chowever inartfully pleaded,\xE2\x80\x9D is held "
      "\xE2\x80\x9Cto less stringent standards than formal pleadings drafted by "
      "lawyers.\xE2\x80\x9D Hughes v. Rowe, 449 U.S. 5, 9, 101 S.Ct. 173, 175, 66 L.Ed.2d "
      "163 (1980).",
      "to evidence deliberate indifference to serious medical needs. The handwritten pro se "
      "document is to be liberally construed.",
      "it done so, ERISA still would govern unless the plan were \xE2\x80\x9Cunfunded.\xE2\x80\x9D"};

  const auto rep = citation_report(generated, relevant, prefix);
  std::vector<std::string> with_refs = prefix;
  with_refs.insert(with_refs.end(), references.begin(), references.end());
  const auto rep_refs = citation_report(generated, relevant, with_refs);
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = rep.cp == Fraction{3, 5} && rep.cr == Fraction{3, 4} && rep.cfp == Fraction{2, 5} &&
           secs < 1.0;
  o.detail = "CP=" + frac(rep.cp) + " CR=" + frac(rep.cr) + " CFP=" + frac(rep.cfp) +
             " (grounding in prefix; with reference texts CFP=" + frac(rep_refs.cfp) + ") " +
             fmt("%.4fs", secs);
  return o;
}

// ---- 2: BM25 vs a naive full scan ----

std::vector<double> naive_bm25(const std::vector<std::vector<std::string>>& docs,
                               const std::vector<std::string>& query) {
  const double k1 = 1.2, b = 0.75;
  const double n = static_cast<double>(docs.size());
  double avg = 0.0;
  for (const auto& d : docs) avg += static_cast<double>(d.size());
  avg /= n;
  std::vector<double> scores(docs.size(), 0.0);
  for (const auto& term : query) {
    double df = 0.0;
    for (const auto& d : docs) {
      if (std::find(d.begin(), d.end(), term) != d.end()) df += 1.0;
    }
    const double idf = std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), term));
      if (tf == 0.0) continue;
      const double len = static_cast<double>(docs[i].size());
      scores[i] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
    }
  }
  return scores;
}

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

Outcome bm25_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t queries = 0, violations = 0, compared = 0;
  double worst = 0.0;
  for (int corpus = 0; corpus < 200; ++corpus) {
    const std::size_t n = 1 + rng() % 1000;
    const std::size_t vocab = 5 + rng() % 2000;
    auto draw = [&]() {
      // Skewed toward small ids so common terms exist.
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      return "t" + std::to_string(static_cast<std::size_t>(u * u * static_cast<double>(vocab)));
    };
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::string>> docs(n);
    std::vector<Unit> units;
    units.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng() % 60;
      for (std::size_t j = 0; j < len; ++j) docs[i].push_back(draw());
      units.push_back({"p" + std::to_string(perm[i]), join_words(docs[i])});
    }
    const auto idx = InvertedIndex::build(units, UnitKind::passage);
    for (int qi = 0; qi < 5; ++qi, ++queries) {
      std::vector<std::string> q;
      for (std::size_t j = 0, m = 1 + rng() % 20; j < m; ++j) {
        q.push_back(rng() % 10 == 0 ? "unseen" + std::to_string(rng() % 5) : draw());
      }
      const auto oracle = naive_bm25(docs, q);
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < n; ++i) {
        if (oracle[i] > 0) order.push_back(i);
      }
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (oracle[a] != oracle[b]) return oracle[a] > oracle[b];
        return units[a].id < units[b].id;
      });
      std::map<std::string, std::size_t> by_id;
      for (std::size_t i = 0; i < n; ++i) by_id[units[i].id] = i;
      const std::size_t k = qi == 0 ? 10 : n;
      const auto run = bm25_search(idx, join_words(q), k);
      const std::size_t expect = std::min(k, order.size());
      if (run.entries.size() != expect) {
        ++violations;
        continue;
      }
      for (std::size_t r = 0; r < expect; ++r) {
        ++compared;
        const auto& e = run.entries[r];
        const std::size_t want = order[r];
        const auto it = by_id.find(e.unit_id);
        if (it == by_id.end()) {
          ++violations;
          continue;
        }
        const double err = std::fabs(e.score - oracle[want]) /
                           std::max(1e-300, std::fabs(oracle[want]));
        worst = std::max(worst, err);
        // A different id at this rank is only acceptable inside a tie that
        // floating-point summation order can split.
        const bool same = it->second == want || close_rel(oracle[it->second], oracle[want], 1e-9);
        if (!same || err > 1e-9 || e.rank != r + 1) ++violations;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = violations == 0 && secs < 60.0;
  o.detail = std::to_string(queries) + " queries, " + std::to_string(compared) +
             " ranked entries, " + std::to_string(violations) + " violations, max rel err " +
             fmt("%.2e", worst) + ", " + fmt("%.1fs", secs);
  return o;
}

// ---- 3: Recall@k and nDCG@k vs brute force ----

double brute_recall(const std::vector<std::string>& ranked, const std::set<std::string>& pos,
                    std::size_t k) {
  if (pos.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.size() && r < k; ++r) hits += pos.count(ranked[r]);
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

double brute_ndcg(const std::vector<std::string>& ranked, const std::set<std::string>& pos,
                  std::size_t k) {
  std::vector<double> gains;
  for (std::size_t r = 0; r < ranked.size() && r < k; ++r) gains.push_back(pos.count(ranked[r]) ? 1.0 : 0.0);
  double dcg = 0.0;
  for (std::size_t r = 0; r < gains.size(); ++r) {
    if (gains[r] > 0) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
  }
  std::vector<double> ideal(pos.size(), 1.0);
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal.size() && r < k; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

Outcome retrieval_metric_oracle() {
  std::mt19937_64 rng(77);
  const std::vector<std::size_t> ks = {1, 3, 5, 10, 20, 50, 100, 1000};
  std::size_t checks = 0, mismatches = 0;
  for (int pair = 0; pair < 100; ++pair) {
    std::map<std::string, RankedList> run;
    std::vector<QrelsEntry> qrels;
    std::map<std::string, std::vector<std::string>> ranked_ids;
    std::map<std::string, std::set<std::string>> positives;
    const std::size_t nq = 1 + rng() % 8;
    for (std::size_t q = 0; q < nq; ++q) {
      const std::string qid = "q" + std::to_string(q);
      std::vector<std::string> pool;
      for (int d = 0; d < 150; ++d) pool.push_back("d" + std::to_string(d));
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t len = rng() % 120;
      RankedList rl;
      rl.query_id = qid;
      for (std::size_t r = 0; r < len; ++r) {
        rl.entries.push_back({pool[r], static_cast<double>(len - r), r + 1});
        ranked_ids[qid].push_back(pool[r]);
      }
      if (rng() % 10 != 0) run[qid] = rl;
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t npos = 1 + rng() % 12;
      for (std::size_t i = 0; i < npos; ++i) {
        qrels.push_back({qid, pool[i], 1});
        positives[qid].insert(pool[i]);
      }
    }
    for (const auto& [qid, pos] : positives) {
      const auto it = run.find(qid);
      const RankedList empty;
      const RankedList& rl = it == run.end() ? empty : it->second;
      const std::vector<std::string> ids = it == run.end() ? std::vector<std::string>{} : ranked_ids[qid];
      for (std::size_t k : ks) {
        checks += 2;
        if (recall_at_k(rl, pos, k) != brute_recall(ids, pos, k)) ++mismatches;
        if (ndcg_at_k(rl, pos, k) != brute_ndcg(ids, pos, k)) ++mismatches;
      }
    }
    const auto rep = evaluate_run(run, qrels, std::span<const std::size_t>(ks.data(), 4), 10);
    for (const auto& qs : rep.per_query) {
      const auto& pos = positives[qs.query_id];
      const auto& ids = run.count(qs.query_id) ? ranked_ids[qs.query_id] : std::vector<std::string>{};
      for (std::size_t m = 0; m < 4; ++m) {
        ++checks;
        if (qs.values[m] != brute_recall(ids, pos, ks[m])) ++mismatches;
      }
      ++checks;
      if (qs.values[4] != brute_ndcg(ids, pos, 10)) ++mismatches;
    }
  }
  RankedList three;
  three.entries = {{"a", 3, 1}, {"b", 2, 2}, {"c", 1, 3}};
  const double v = ndcg_at_k(three, {"c"}, 10);
  Outcome o;
  o.pass = mismatches == 0 && std::fabs(v - 0.5) <= 1e-12;
  o.detail = std::to_string(checks) + " comparisons, " + std::to_string(mismatches) +
             " mismatches; single positive at rank 3 nDCG=" + fmt("%.15f", v);
  return o;
}

// ---- 4: chunker properties ----

Outcome chunker_properties() {
  std::mt19937_64 rng(5);
  const std::vector<std::string> shapes = {"court", "v.", "U.S.", "held,", "\xE2\x80\x9Cthe", "1983;", "(7th", "Cir.1984)."};
  std::size_t coverage = 0, overlap = 0, size = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t w = 1 + rng() % 5000;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < w; ++i) words.push_back(shapes[rng() % shapes.size()] + std::to_string(i));
    CaseDocument doc;
    doc.doc_id = "d" + std::to_string(trial);
    doc.text = join_words(words);
    doc.paragraphs = {{0, doc.text.size()}};
    const auto chunks = chunk_document(doc);
    std::vector<std::string> rebuilt;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto cw = split_ws(chunks[c].text);
      if (cw.size() > 350 || cw.size() != chunks[c].word_end - chunks[c].word_start) ++size;
      std::size_t skip = 0;
      if (c > 0) {
        const auto& prev = chunks[c - 1];
        const std::size_t ov = prev.word_end > chunks[c].word_start ? prev.word_end - chunks[c].word_start : 0;
        if (ov != 175) ++overlap;
        skip = std::min(ov, cw.size());
      } else if (chunks[c].word_start != 0) {
        ++coverage;
      }
      rebuilt.insert(rebuilt.end(), cw.begin() + static_cast<std::ptrdiff_t>(skip), cw.end());
    }
    if (rebuilt != words) ++coverage;
  }
  Outcome o;
  o.pass = coverage == 0 && overlap == 0 && size == 0;
  o.detail = "1000 documents: coverage violations " + std::to_string(coverage) +
             ", overlap violations " + std::to_string(overlap) + ", size violations " +
             std::to_string(size);
  return o;
}

// ---- 5: masking soundness ----

Outcome masking_soundness() {
  const auto docs = load_mini_corpus();
  const CitationParser parser;
  const auto keys = CorpusKeyIndex::build(docs, parser);
  const QueryBuilder builder(parser, keys);
  std::size_t single = 0, all = 0, central_hits = 0, case_left = 0, statute_changed = 0;
  std::size_t statutes_kept = 0;
  for (const auto& doc : docs) {
    ConstructionReport report;
    for (const auto& q : builder.build_queries(doc, QueryView::single_removed, kDefaultQueryWindow, report)) {
      ++single;
      for (const auto& s : parser.parse(q.masked_text)) {
        if (s.kind == CitationKind::statute || !s.key) continue;
        if (std::find(s.parallel_keys.begin(), s.parallel_keys.end(), q.central_key) !=
                s.parallel_keys.end() ||
            *s.key == q.central_key) {
          ++central_hits;
        }
      }
    }
    for (const auto& q : builder.build_queries(doc, QueryView::all_removed, kDefaultQueryWindow, report)) {
      ++all;
      std::vector<std::string> before, after;
      for (const auto& s : parser.parse(q.left_context + q.central_sentence + q.right_context)) {
        if (s.kind == CitationKind::statute) before.push_back(s.raw);
      }
      for (const auto& s : parser.parse(q.masked_text)) {
        if (s.kind == CitationKind::case_citation) ++case_left;
        if (s.kind == CitationKind::statute) after.push_back(s.raw);
      }
      if (before != after) ++statute_changed;
      statutes_kept += after.size();
    }
  }
  Outcome o;
  o.pass = single > 0 && all > 0 && central_hits == 0 && case_left == 0 && statute_changed == 0;
  o.detail = std::to_string(single) + " single-removed queries with " +
             std::to_string(central_hits) + " central-key hits; " + std::to_string(all) +
             " all-removed queries with " + std::to_string(case_left) +
             " case citations left and " + std::to_string(statute_changed) +
             " changed statute lists (" + std::to_string(statutes_kept) + " statutes kept)";
  return o;
}

// ---- 6: direct-quote retrieval ----

std::string pseudo_word(std::mt19937_64& rng) {
  static const std::string consonants = "bcdfghklmnprstvw";
  static const std::string vowels = "aeiou";
  std::string w;
  const std::size_t syll = 1 + rng() % 3;
  for (std::size_t i = 0; i < syll; ++i) {
    w += consonants[rng() % consonants.size()];
    w += vowels[rng() % vowels.size()];
  }
  return w;
}

Outcome quote_retrieval() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::vector<std::string> vocab;
  for (int i = 0; i < 4000; ++i) vocab.push_back(pseudo_word(rng));
  std::vector<std::vector<std::string>> texts(400);
  std::vector<Unit> units;
  for (std::size_t u = 0; u < texts.size(); ++u) {
    for (int i = 0; i < 250; ++i) {
      std::string w = vocab[rng() % vocab.size()];
      if (rng() % 12 == 0) w += ',';
      texts[u].push_back(w);
    }
    units.push_back({"case" + std::to_string(u), join_words(texts[u])});
  }
  const QuoteRetriever retriever(units, {5});
  std::size_t verbatim_hits = 0, altered_exact_hits = 0, altered_rank1 = 0;
  for (int q = 0; q < 100; ++q) {
    const std::size_t src = static_cast<std::size_t>(q) * 4;
    const std::size_t len = 15 + rng() % 16;
    const std::size_t from = rng() % (texts[src].size() - len);
    std::vector<std::string> words(texts[src].begin() + static_cast<std::ptrdiff_t>(from),
                                   texts[src].begin() + static_cast<std::ptrdiff_t>(from + len));
    const std::string id = units[src].id;
    if (q < 50) {
      const auto hits = retriever.exact_match_search(join_words(words));
      verbatim_hits += std::count(hits.begin(), hits.end(), id) > 0;
      continue;
    }
    const std::size_t at = 1 + rng() % (len - 2);
    switch (q % 3) {
      case 0:  // contextual clarification: an inserted bracketed word
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), "[" + pseudo_word(rng) + "]");
        break;
      case 1:  // a word replaced in brackets
        words[at] = "[" + pseudo_word(rng) + "]";
        break;
      default: {  // capitalization change
        std::string& w = words[at];
        w = std::string("[") + static_cast<char>(w[0] - 'a' + 'A') + "]" + w.substr(1);
      }
    }
    const std::string quote = join_words(words);
    const auto hits = retriever.exact_match_search(quote);
    altered_exact_hits += std::count(hits.begin(), hits.end(), id) > 0;
    const auto run = retriever.ngram_search(quote, 5, 10);
    if (!run.entries.empty() && run.entries.front().unit_id == id) ++altered_rank1;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = verbatim_hits == 50 && altered_exact_hits == 0 && altered_rank1 >= 48 && secs < 30.0;
  o.detail = "exact recall verbatim " + fmt("%.2f", verbatim_hits / 50.0) + ", altered " +
             fmt("%.2f", altered_exact_hits / 50.0) + "; 5-gram rank-1 on altered " +
             std::to_string(altered_rank1) + "/50; " + fmt("%.2fs", secs);
  return o;
}

// ---- 7 and 8: generation set ----

struct MiniGenset {
  std::vector<CaseDocument> docs;
  std::vector<GenerationInstance> instances;
};

const MiniGenset& mini_genset() {
  static const MiniGenset g = [] {
    MiniGenset m;
    m.docs = load_mini_corpus();
    const CitationParser parser;
    const auto keys = CorpusKeyIndex::build(m.docs, parser);
    std::vector<Unit> units;
    for (const auto& d : m.docs) {
      for (const auto& p : chunk_document(d)) units.push_back({p.passage_id, p.text});
    }
    const auto index = InvertedIndex::build(units, UnitKind::passage);
    GensetOptions opts;
    opts.seed = PipelineConfig{}.seed;
    const GensetBuilder builder(parser, keys, m.docs, index, opts);
    GensetReport report;
    m.instances = builder.build(m.docs, report);
    return m;
  }();
  return g;
}

Outcome genset_constraints() {
  const auto& g = mini_genset();
  const CitationParser parser;
  std::map<std::string, const CaseDocument*> by_id;
  for (const auto& d : g.docs) by_id[d.doc_id] = &d;
  std::size_t bad_t = 0, bad_cites = 0, bad_gold = 0;
  for (const auto& inst : g.instances) {
    const auto& doc = *by_id.at(inst.doc_id);
    const std::size_t n = doc.paragraphs.size();
    if (inst.paragraph_count != n || inst.t < (2 * n) / 3 || inst.t + 2 > n) ++bad_t;
    if (inst.gold != doc.paragraph(inst.t - 1)) ++bad_gold;
    std::set<std::size_t> groups;
    for (const auto& s : parser.parse(inst.gold)) {
      if (s.kind == CitationKind::case_citation) groups.insert(s.group);
    }
    if (groups.size() < 2 || inst.cited_keys.size() < 2) ++bad_cites;
  }

  GenerationInstance fx;
  fx.prefix = "The court first addressed jurisdiction.\nIt then turned to the merits.";
  fx.cited_keys = {{449, "U.S.", 5}, {748, "F.2d", 1142}};
  fx.references = {{{449, "U.S.", 5}, "hughes", "Reference text one."},
                   {{748, "F.2d", 1142}, "matzker", "Reference text two."}};
  const std::string golden_with =
      "Here are some reference articles for legal cases:\n"
      "# Reference case 449 U.S. 5\nReference text one.\n"
      "# Reference case 748 F.2d 1142\nReference text two.\n"
      "\n"
      "Here is the text I've written so far:\n"
      "# Paragrah\n"
      "The court first addressed jurisdiction.\nIt then turned to the merits.\n"
      "\n"
      "Continue to write it following the style of my writeup. Your answer contains 100 to "
      "400 words. You must explicitly use the reference cases and mention their reference "
      "ids, i.e. 449 U.S. 5, 748 F.2d 1142. Wrap your answer with <answer></answer>. Make "
      "your answer concise and avoid redundant languages.";
  const std::string golden_without =
      "Here is the text I've written so far:\n"
      "# Paragrah\n"
      "The court first addressed jurisdiction.\nIt then turned to the merits.\n"
      "\n"
      "Continue to write it following the style of my writeup. Your answer contains 100 to "
      "400 words. Wrap your answer with <answer></answer>. Make your answer concise and "
      "avoid redundant languages.";
  const bool prompts = render_prompt(fx, true) == golden_with &&
                       render_prompt(fx, false) == golden_without;
  std::size_t bad_prompt = 0;
  for (const auto& inst : g.instances) {
    if (inst.prompt_with_refs != render_prompt(inst, true) ||
        inst.prompt_without_refs != render_prompt(inst, false)) {
      ++bad_prompt;
    }
  }
  Outcome o;
  o.pass = !g.instances.empty() && bad_t == 0 && bad_cites == 0 && bad_gold == 0 && prompts &&
           bad_prompt == 0;
  o.detail = std::to_string(g.instances.size()) + " instances: t-range violations " +
             std::to_string(bad_t) + ", <2 citation violations " + std::to_string(bad_cites) +
             ", gold mismatches " + std::to_string(bad_gold) + "; golden prompts " +
             (prompts ? "byte-identical" : "DIFFER") + ", instance prompt mismatches " +
             std::to_string(bad_prompt);
  return o;
}

Outcome self_scoring() {
  const auto& g = mini_genset();
  std::vector<Generation> gens;
  for (const auto& inst : g.instances) gens.push_back({inst.instance_id, "gold", inst.gold});
  const CitationParser parser;
  const auto systems = score_generation_run(g.instances, gens, parser);
  std::size_t bad = 0, scored = 0;
  for (const auto& s : systems) {
    for (const auto& inst : s.per_instance) {
      ++scored;
      const auto& v = inst.values;
      if (v[0] != 1.0 || v[1] != 1.0 || v[2] != 1.0 || v[3] != 1.0 || v[4] != 1.0 || v[5] != 0.0) {
        ++bad;
        std::cerr << "  self-scoring " << inst.instance_id << ":";
        for (double x : v) std::cerr << ' ' << x;
        std::cerr << '\n';
      }
    }
  }
  Outcome o;
  o.pass = scored == g.instances.size() && scored > 0 && bad == 0;
  o.detail = std::to_string(scored) + " instances scored, " + std::to_string(bad) +
             " not at R1=R2=RL=CR=CP=1, CFP=0";
  return o;
}

// ---- 9: determinism ----

bool run_pipeline(const fs::path& dir, const std::string& threads, std::string& log) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string corpus = std::string(CLERC_DATA_DIR) + "/mini_corpus.jsonl";
  auto p = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> steps = {
      {"ingest", "--input", corpus, "--output", p("docs.jsonl")},
      {"chunk", "--input", p("docs.jsonl"), "--output", p("passages.jsonl")},
      {"parse-citations", "--input", p("docs.jsonl"), "--output", p("citations.jsonl"),
       "--quotes", p("quotes.jsonl")},
      {"build-queries", "--input", p("docs.jsonl"), "--output", p("queries.jsonl"), "--qrels",
       p("qrels.txt"), "--passage-qrels", p("passage_qrels.txt")},
      {"index", "--input", p("passages.jsonl"), "--output", p("passages.idx"), "--shards", "3"},
      {"search", "--index", p("passages.idx"), "--queries", p("queries.jsonl"), "--output",
       p("run.trec"), "--maxp", "--k", "100"},
      {"eval-retrieval", p("run.trec"), p("qrels.txt"), "--output", p("retrieval.json")},
      {"build-genset", "--input", p("docs.jsonl"), "--output", p("genset.jsonl")},
      {"search-quotes", "--input", p("passages.jsonl"), "--quotes", p("quotes.jsonl"),
       "--output", p("quotes.trec"), "--method", "ngram"},
  };
  for (auto args : steps) {
    args.insert(args.begin(), {"--threads", threads});
    std::ostringstream out, err;
    if (run_cli(args, out, err) != 0) {
      log = args[2] + ": " + err.str();
      return false;
    }
  }
  // Gold paragraphs as generations, then score them.
  std::ifstream gin(p("genset.jsonl"));
  std::vector<Generation> gens;
  for (const auto& inst : read_genset(gin)) gens.push_back({inst.instance_id, "gold", inst.gold});
  {
    std::ofstream gout(p("generations.jsonl"), std::ios::binary);
    write_generations(gout, gens);
  }
  std::ostringstream out, err;
  if (run_cli({"--threads", threads, "eval-generation", "--genset", p("genset.jsonl"),
               "--generations", p("generations.jsonl"), "--output", p("generation.json")},
              out, err) != 0) {
    log = "eval-generation: " + err.str();
    return false;
  }
  return true;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / ("clerc_accept_" + std::to_string(::getpid()));
  std::string log;
  Outcome o;
  if (!run_pipeline(base / "a", "1", log) || !run_pipeline(base / "b", "4", log)) {
    o.detail = "pipeline failed: " + log;
    fs::remove_all(base);
    return o;
  }
  std::map<std::string, std::string> a, b;
  for (const auto& e : fs::directory_iterator(base / "a")) a[e.path().filename()] = read_file(e.path());
  for (const auto& e : fs::directory_iterator(base / "b")) b[e.path().filename()] = read_file(e.path());
  std::size_t manifests = 0, differing = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : a) {
    if (name.find(".manifest.json") != std::string::npos) ++manifests;
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      ++differing;
      if (first_diff.empty()) first_diff = name;
    }
  }
  fs::remove_all(base);
  o.pass = a.size() == b.size() && differing == 0 && manifests >= 9;
  o.detail = std::to_string(a.size()) + " files (" + std::to_string(manifests) +
             " manifests) compared across two runs (1 and 4 threads): " +
             std::to_string(differing) + " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")");
  return o;
}

// ---- 10: scale ----

long peak_rss_kb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_maxrss;
}

Outcome scale_smoke() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const std::size_t vocab = 50000;
  std::vector<double> weights(vocab);
  for (std::size_t r = 0; r < vocab; ++r) weights[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
  std::vector<Unit> units;
  units.reserve(100000);
  for (std::size_t i = 0; i < 100000; ++i) {
    std::string text;
    const std::size_t len = 100 + rng() % 251;
    for (std::size_t j = 0; j < len; ++j) {
      if (j) text += ' ';
      text += 'w';
      text += std::to_string(zipf(rng));
    }
    units.push_back({"doc" + std::to_string(i / 8) + "#" + std::to_string(i % 8), std::move(text)});
  }
  const double gen_secs = seconds_since(t0);
  const auto t1 = Clock::now();
  IndexBuildOptions opts;
  opts.threads = 4;
  opts.shards = 4;
  const auto index = InvertedIndex::build(units, UnitKind::passage, opts);
  const double build_secs = seconds_since(t1);

  // Queries are 100-word windows taken from random passages.
  std::vector<std::pair<std::string, std::string>> queries;
  for (std::size_t q = 0; q < 1000; ++q) {
    const auto words = split_ws(units[rng() % units.size()].text);
    const std::size_t from = rng() % (words.size() - 99);
    queries.emplace_back("q" + std::to_string(q),
                         join_words(std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(from),
                                                             words.begin() + static_cast<std::ptrdiff_t>(from + 100))));
  }
  units.clear();
  units.shrink_to_fit();
  const auto t2 = Clock::now();
  const auto runs = bm25_search_batch(index, queries, 1000, {}, 4);
  const double search_secs = seconds_since(t2);
  std::size_t full = 0;
  for (const auto& r : runs) full += r.entries.size() == 1000;
  const double total = seconds_since(t0);
  const double rss_gb = static_cast<double>(peak_rss_kb()) / (1024.0 * 1024.0);
  Outcome o;
  o.pass = runs.size() == 1000 && full == 1000 && total < 300.0 && rss_gb < 4.0;
  o.detail = "100000 passages (" + std::to_string(index.vocabulary_size()) + " terms), generate " +
             fmt("%.1fs", gen_secs) + ", index " + fmt("%.1fs", build_secs) +
             ", 1000 queries at k=1000 " + fmt("%.1fs", search_secs) + ", total " +
             fmt("%.1fs", total) + ", peak RSS " + fmt("%.2f GB", rss_gb);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"citation-metrics fidelity", citation_metrics_example},
      {"bm25 oracle equivalence", bm25_oracle},
      {"retrieval-metric oracle equivalence", retrieval_metric_oracle},
      {"chunker properties", chunker_properties},
      {"masking soundness", masking_soundness},
      {"direct-quote retrieval", quote_retrieval},
      {"generation-set constraints", genset_constraints},
      {"self-scoring sanity", self_scoring},
      {"determinism", determinism},
      {"scale smoke test", scale_smoke},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << n << "] " << name << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
