#include "clerc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "clerc/errors.hpp"
#include "clerc/text.hpp"

namespace clerc {

namespace {

using json = nlohmann::json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

// Renders rows as space-separated columns; the first column is left-aligned.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    if (widths.size() < r.size()) widths.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) line += "  ";
      line += pad(r[i], widths[i], i != 0);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::vector<std::string> ngrams(const std::vector<std::string>& words, std::size_t n) {
  std::vector<std::string> out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string g = words[i];
    for (std::size_t j = 1; j < n; ++j) {
      g.push_back(' ');
      g += words[i + j];
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::size_t clipped_overlap(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& g : b) ++counts[g];
  std::size_t hits = 0;
  for (const auto& g : a) {
    auto it = counts.find(g);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  return hits;
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore from_counts(std::size_t hits, std::size_t cand, std::size_t ref) {
  RougeScore s;
  if (cand == 0 || ref == 0) return s;
  s.precision = static_cast<double>(hits) / static_cast<double>(cand);
  s.recall = static_cast<double>(hits) / static_cast<double>(ref);
  if (hits > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    out.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

json fraction_json(const Fraction& f) {
  return {{"num", f.num}, {"den", f.den}, {"value", f.value()}};
}

}  // namespace

// ---- retrieval ----

QrelsMap positives_by_query(std::span<const QrelsEntry> qrels) {
  QrelsMap out;
  for (const auto& e : qrels) {
    if (e.relevance > 0) out[e.query_id].insert(e.unit_id);
  }
  return out;
}

double recall_at_k(const RankedList& run, const std::set<std::string>& positives,
                   std::size_t k) {
  if (positives.empty()) return 0.0;
  std::size_t hits = 0;
  const std::size_t n = std::min(k, run.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (positives.count(run.entries[i].unit_id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(positives.size());
}

double ndcg_at_k(const RankedList& run, const std::set<std::string>& positives,
                 std::size_t k) {
  if (positives.empty() || k == 0) return 0.0;
  double dcg = 0.0;
  const std::size_t n = std::min(k, run.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (positives.count(run.entries[i].unit_id)) dcg += 1.0 / std::log2(i + 2.0);
  }
  double ideal = 0.0;
  const std::size_t m = std::min(k, positives.size());
  for (std::size_t i = 0; i < m; ++i) ideal += 1.0 / std::log2(i + 2.0);
  return dcg / ideal;
}

RetrievalReport evaluate_run(const std::map<std::string, RankedList>& run,
                             std::span<const QrelsEntry> qrels,
                             std::span<const std::size_t> recall_ks,
                             std::size_t ndcg_k) {
  RetrievalReport report;
  for (std::size_t k : recall_ks) report.metrics.push_back("R@" + std::to_string(k));
  report.metrics.push_back("nDCG@" + std::to_string(ndcg_k));
  report.macro.assign(report.metrics.size(), 0.0);

  const QrelsMap pos = positives_by_query(qrels);
  const RankedList empty;
  for (const auto& [qid, positives] : pos) {
    QueryScores qs;
    qs.query_id = qid;
    auto it = run.find(qid);
    const RankedList& list = it == run.end() ? empty : it->second;
    qs.missing_from_run = it == run.end();
    if (qs.missing_from_run) ++report.missing_from_run;
    for (std::size_t k : recall_ks) qs.values.push_back(recall_at_k(list, positives, k));
    qs.values.push_back(ndcg_at_k(list, positives, ndcg_k));
    for (std::size_t i = 0; i < qs.values.size(); ++i) report.macro[i] += qs.values[i];
    report.per_query.push_back(std::move(qs));
  }
  report.scored = report.per_query.size();
  if (report.scored > 0) {
    for (double& v : report.macro) v /= static_cast<double>(report.scored);
  }
  for (const auto& [qid, list] : run) {
    if (!pos.count(qid)) report.unjudged.push_back(qid);
  }
  return report;
}

// ---- ROUGE ----

std::string_view to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::rouge1: return "R1";
    case RougeVariant::rouge2: return "R2";
    case RougeVariant::rougeL: return "RL";
  }
  return "?";
}

RougeScore rouge(std::string_view candidate, std::string_view reference,
                 RougeVariant variant) {
  const auto c = normalized_words(candidate);
  const auto r = normalized_words(reference);
  if (c.empty() || r.empty()) {
    RougeScore s;
    s.degenerate = true;
    return s;
  }
  switch (variant) {
    case RougeVariant::rouge1:
      return from_counts(clipped_overlap(c, r), c.size(), r.size());
    case RougeVariant::rouge2: {
      const auto cg = ngrams(c, 2);
      const auto rg = ngrams(r, 2);
      return from_counts(clipped_overlap(cg, rg), cg.size(), rg.size());
    }
    case RougeVariant::rougeL:
      return from_counts(lcs_length(c, r), c.size(), r.size());
  }
  return {};
}

// ---- citation metrics ----

std::string_view to_string(CitationVerdict v) {
  switch (v) {
    case CitationVerdict::matched: return "matched";
    case CitationVerdict::prefix_grounded: return "prefix-grounded";
    case CitationVerdict::hallucinated: return "hallucinated";
  }
  return "?";
}

CitationReport citation_report(std::span<const GeneratedCitation> generated,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts) {
  if (relevant.empty()) {
    throw std::invalid_argument("citation_report: empty relevant set");
  }
  CitationReport rep;
  for (const auto& k : relevant) {
    if (std::find(rep.relevant.begin(), rep.relevant.end(), k) == rep.relevant.end()) {
      rep.relevant.push_back(k);
    }
  }

  // Merge duplicates, keeping every surface form.
  std::vector<GeneratedCitation> merged;
  for (const auto& g : generated) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const GeneratedCitation& m) { return m.key == g.key; });
    if (it == merged.end()) {
      merged.push_back(g);
    } else {
      it->surface_forms.insert(it->surface_forms.end(), g.surface_forms.begin(),
                               g.surface_forms.end());
    }
  }

  std::size_t matched = 0;
  std::size_t hallucinated = 0;
  for (const auto& g : merged) {
    rep.generated.push_back(g.key);
    const bool in_relevant =
        std::find(rep.relevant.begin(), rep.relevant.end(), g.key) != rep.relevant.end();
    if (in_relevant) {
      ++matched;
      rep.verdicts.push_back(CitationVerdict::matched);
      continue;
    }
    std::vector<std::string> forms = g.surface_forms;
    forms.push_back(g.key.to_string());
    bool grounded = false;
    for (const auto& text : grounding_texts) {
      for (const auto& f : forms) {
        if (!f.empty() && text.find(f) != std::string::npos) {
          grounded = true;
          break;
        }
      }
      if (grounded) break;
    }
    if (grounded) {
      rep.verdicts.push_back(CitationVerdict::prefix_grounded);
    } else {
      ++hallucinated;
      rep.verdicts.push_back(CitationVerdict::hallucinated);
    }
  }

  const std::size_t m = rep.generated.size();
  rep.degenerate = m == 0;
  rep.cr = {rep.degenerate ? 0 : matched, rep.relevant.size()};
  rep.cp = {matched, m};
  rep.cfp = {hallucinated, m};
  return rep;
}

CitationReport citation_report(std::span<const CitationKey> generated,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts) {
  std::vector<GeneratedCitation> gens;
  for (const auto& k : generated) gens.push_back({k, {k.to_string()}});
  return citation_report(gens, relevant, grounding_texts);
}

std::vector<GeneratedCitation> extract_generated_citations(
    std::string_view text, const CitationParser& parser) {
  // A parallel group is one citation, keyed by its first reporter.
  std::vector<GeneratedCitation> out;
  std::optional<std::size_t> last_group;
  for (const CitationSpan& s : parser.parse(text)) {
    if (s.kind != CitationKind::case_citation || !s.key) continue;
    if (last_group && *last_group == s.group && !out.empty()) {
      out.back().surface_forms.push_back(s.raw);
      continue;
    }
    const CitationKey key = s.parallel_keys.empty() ? *s.key : s.parallel_keys.front();
    out.push_back({key, {s.raw}});
    last_group = s.group;
  }
  return out;
}

CitationReport citation_report(std::string_view generated_text,
                               std::span<const CitationKey> relevant,
                               std::span<const std::string> grounding_texts,
                               const CitationParser& parser) {
  const auto gens = extract_generated_citations(generated_text, parser);
  return citation_report(std::span<const GeneratedCitation>(gens), relevant,
                         grounding_texts);
}

// ---- generation scoring ----

std::vector<Generation> read_generations(std::istream& in) {
  std::vector<Generation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("instance_id").get<std::string>(),
                     j.value("system", std::string("default")),
                     j.at("output_text").get<std::string>()});
    } catch (const json::exception& e) {
      throw DataError("generations line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_generations(std::ostream& out, std::span<const Generation> gens) {
  for (const auto& g : gens) {
    json j;
    j["instance_id"] = g.instance_id;
    j["system"] = g.system;
    j["output_text"] = g.output_text;
    out << j.dump() << '\n';
  }
}

std::vector<SystemScores> score_generation_run(
    std::span<const GenerationInstance> instances,
    std::span<const Generation> generations, const CitationParser& parser,
    const GenerationScoreOptions& options) {
  std::map<std::string, const GenerationInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.instance_id, &inst);

  std::map<std::string, std::vector<const Generation*>> by_system;
  for (const auto& g : generations) by_system[g.system].push_back(&g);

  std::vector<SystemScores> out;
  for (const auto& [system, gens] : by_system) {
    SystemScores sys;
    sys.system = system;
    sys.micro = options.micro;
    std::set<std::string> seen;
    Fraction cr_pool, cp_pool, cfp_pool;
    for (const Generation* g : gens) {
      auto it = by_id.find(g->instance_id);
      if (it == by_id.end()) {
        sys.unmatched_ids.push_back(g->instance_id);
        continue;
      }
      if (!seen.insert(g->instance_id).second) continue;  // first output wins
      const GenerationInstance& inst = *it->second;

      InstanceScores is;
      is.instance_id = inst.instance_id;
      const RougeScore r1 = rouge(g->output_text, inst.gold, RougeVariant::rouge1);
      const RougeScore r2 = rouge(g->output_text, inst.gold, RougeVariant::rouge2);
      const RougeScore rl = rouge(g->output_text, inst.gold, RougeVariant::rougeL);
      is.rouge_degenerate = r1.degenerate;
      if (is.rouge_degenerate) ++sys.degenerate_rouge;

      std::vector<std::string> grounding = split_lines(inst.prefix);
      if (options.include_references_in_substring_check) {
        for (const auto& ref : inst.references) grounding.push_back(ref.text);
      }
      if (inst.cited_keys.empty()) {
        sys.unmatched_ids.push_back(g->instance_id);
        continue;
      }
      is.citations = citation_report(g->output_text, inst.cited_keys, grounding, parser);
      if (is.citations.degenerate) ++sys.degenerate_citations;
      is.values = {r1.f1, r2.f1, rl.f1, is.citations.cr.value(),
                   is.citations.cp.value(), is.citations.cfp.value()};
      cr_pool.num += is.citations.cr.num;
      cr_pool.den += is.citations.cr.den;
      cp_pool.num += is.citations.cp.num;
      cp_pool.den += is.citations.cp.den;
      cfp_pool.num += is.citations.cfp.num;
      cfp_pool.den += is.citations.cfp.den;
      sys.per_instance.push_back(std::move(is));
    }
    for (const auto& inst : instances) {
      if (!seen.count(inst.instance_id)) sys.missing_ids.push_back(inst.instance_id);
    }
    if (!sys.per_instance.empty()) {
      for (const auto& is : sys.per_instance) {
        for (std::size_t i = 0; i < 6; ++i) sys.averages[i] += is.values[i];
      }
      for (double& v : sys.averages) v /= static_cast<double>(sys.per_instance.size());
      if (options.micro) {
        sys.averages[3] = cr_pool.value();
        sys.averages[4] = cp_pool.value();
        sys.averages[5] = cfp_pool.value();
      }
    }
    out.push_back(std::move(sys));
  }
  return out;
}

RunComparison compare_runs(std::span<const SystemScores> with_refs,
                           std::span<const SystemScores> without_refs) {
  RunComparison cmp;
  std::array<double, 6> sum_with{}, sum_without{};
  for (const auto& w : with_refs) {
    auto it = std::find_if(without_refs.begin(), without_refs.end(),
                           [&](const SystemScores& s) { return s.system == w.system; });
    if (it == without_refs.end()) continue;
    SystemComparison sc;
    sc.system = w.system;
    for (std::size_t i = 0; i < 6; ++i) {
      sc.metrics[i] = {w.averages[i], it->averages[i], w.averages[i] - it->averages[i]};
      sum_with[i] += w.averages[i];
      sum_without[i] += it->averages[i];
    }
    cmp.systems.push_back(std::move(sc));
  }
  if (!cmp.systems.empty()) {
    const double n = static_cast<double>(cmp.systems.size());
    for (std::size_t i = 0; i < 6; ++i) {
      const double mw = sum_with[i] / n;
      const double mo = sum_without[i] / n;
      cmp.avg_gain_percent[i] = mo == 0.0 ? 0.0 : (mw - mo) / std::fabs(mo) * 100.0;
    }
  }
  return cmp;
}

// ---- report output ----

std::string retrieval_report_json(const RetrievalReport& report) {
  json j;
  j["metrics"] = report.metrics;
  json macro = json::object();
  for (std::size_t i = 0; i < report.metrics.size(); ++i) {
    macro[report.metrics[i]] = report.macro[i];
  }
  j["macro"] = macro;
  j["scored"] = report.scored;
  j["missing_from_run"] = report.missing_from_run;
  j["unjudged"] = report.unjudged;
  json per = json::array();
  for (const auto& q : report.per_query) {
    json row;
    row["query_id"] = q.query_id;
    row["missing_from_run"] = q.missing_from_run;
    for (std::size_t i = 0; i < report.metrics.size(); ++i) {
      row[report.metrics[i]] = q.values[i];
    }
    per.push_back(std::move(row));
  }
  j["per_query"] = per;
  return j.dump(2) + "\n";
}

std::string retrieval_report_table(const RetrievalReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"metric"};
  std::vector<std::string> vals{"macro"};
  for (std::size_t i = 0; i < report.metrics.size(); ++i) {
    head.push_back(report.metrics[i]);
    vals.push_back(fixed(report.macro[i] * 100.0, 2));
  }
  rows.push_back(head);
  rows.push_back(vals);
  std::string out = aligned(rows);
  out += "queries scored: " + std::to_string(report.scored) +
         ", missing from run: " + std::to_string(report.missing_from_run) +
         ", unjudged run queries: " + std::to_string(report.unjudged.size()) + "\n";
  return out;
}

std::string generation_report_json(std::span<const SystemScores> systems,
                                   const RunComparison* comparison) {
  json j;
  json sys_arr = json::array();
  for (const auto& s : systems) {
    json js;
    js["system"] = s.system;
    js["averaging"] = s.micro ? "micro" : "macro";
    js["instances"] = s.per_instance.size();
    json avg = json::object();
    for (std::size_t i = 0; i < 6; ++i) avg[std::string(kGenerationMetrics[i])] = s.averages[i];
    js["averages"] = avg;
    js["degenerate_citations"] = s.degenerate_citations;
    js["degenerate_rouge"] = s.degenerate_rouge;
    js["unmatched_ids"] = s.unmatched_ids;
    js["missing_ids"] = s.missing_ids;
    json per = json::array();
    for (const auto& is : s.per_instance) {
      json row;
      row["instance_id"] = is.instance_id;
      for (std::size_t i = 0; i < 6; ++i) row[std::string(kGenerationMetrics[i])] = is.values[i];
      row["cr"] = fraction_json(is.citations.cr);
      row["cp"] = fraction_json(is.citations.cp);
      row["cfp"] = fraction_json(is.citations.cfp);
      row["degenerate"] = is.citations.degenerate;
      json verdicts = json::array();
      for (std::size_t k = 0; k < is.citations.generated.size(); ++k) {
        verdicts.push_back({{"key", is.citations.generated[k].to_string()},
                            {"verdict", to_string(is.citations.verdicts[k])}});
      }
      row["citations"] = verdicts;
      per.push_back(std::move(row));
    }
    js["per_instance"] = per;
    sys_arr.push_back(std::move(js));
  }
  j["systems"] = sys_arr;
  if (comparison) {
    json cmp = json::array();
    for (const auto& sc : comparison->systems) {
      json row;
      row["system"] = sc.system;
      for (std::size_t i = 0; i < 6; ++i) {
        row[std::string(kGenerationMetrics[i])] = {
            {"with_refs", sc.metrics[i].with_refs},
            {"without_refs", sc.metrics[i].without_refs},
            {"delta", sc.metrics[i].delta}};
      }
      cmp.push_back(std::move(row));
    }
    j["comparison"] = cmp;
    json gain = json::object();
    for (std::size_t i = 0; i < 6; ++i) {
      gain[std::string(kGenerationMetrics[i])] = comparison->avg_gain_percent[i];
    }
    j["avg_gain_percent"] = gain;
  }
  return j.dump(2) + "\n";
}

std::string generation_report_table(std::span<const SystemScores> systems,
                                    const RunComparison* comparison) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"system"};
  for (auto m : kGenerationMetrics) head.emplace_back(m);
  head.emplace_back("n");
  rows.push_back(head);
  for (const auto& s : systems) {
    std::vector<std::string> r{s.system};
    for (double v : s.averages) r.push_back(fixed(v * 100.0, 2));
    r.push_back(std::to_string(s.per_instance.size()));
    rows.push_back(std::move(r));
  }
  std::string out = aligned(rows);
  if (comparison && !comparison->systems.empty()) {
    std::vector<std::vector<std::string>> crows;
    std::vector<std::string> chead{"system (with / without)"};
    for (auto m : kGenerationMetrics) chead.emplace_back(m);
    crows.push_back(chead);
    for (const auto& sc : comparison->systems) {
      std::vector<std::string> r{sc.system};
      for (const auto& d : sc.metrics) {
        r.push_back(fixed(d.with_refs * 100.0, 2) + " / " +
                    fixed(d.without_refs * 100.0, 2));
      }
      crows.push_back(std::move(r));
    }
    std::vector<std::string> gain{"Avg Gain (%)"};
    for (double g : comparison->avg_gain_percent) gain.push_back(fixed(g, 2));
    crows.push_back(std::move(gain));
    out += "\n" + aligned(crows);
  }
  return out;
}

}  // namespace clerc
