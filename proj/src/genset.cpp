#include "clerc/genset.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "clerc/errors.hpp"
#include "clerc/text.hpp"

namespace clerc {

namespace {

using json = nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Case-citation groups of `text` in order of first mention; each entry
// holds the group's keys in text order.
std::vector<std::vector<CitationKey>> citation_groups(
    std::string_view text, const CitationParser& parser) {
  std::vector<std::vector<CitationKey>> groups;
  std::set<std::size_t> seen;
  for (const CitationSpan& s : parser.parse(text)) {
    if (s.kind != CitationKind::case_citation) continue;
    if (seen.insert(s.group).second) groups.push_back(s.parallel_keys);
  }
  return groups;
}

std::string first_words(std::string_view text, std::size_t max_words) {
  const auto words = tokenize_words(text);
  if (words.size() <= max_words) return std::string(text);
  if (max_words == 0) return {};
  return std::string(text.substr(0, words[max_words - 1].end));
}

}  // namespace

std::vector<std::size_t> select_reference_paragraphs(const CaseDocument& doc,
                                                     const CitationParser& parser) {
  std::vector<std::size_t> out;
  const std::size_t n = doc.paragraphs.size();
  if (n < 3) return out;
  const std::size_t lo = std::max<std::size_t>(1, 2 * n / 3);
  const std::size_t hi = n - 2;
  for (std::size_t t = lo; t <= hi; ++t) {
    if (citation_groups(doc.paragraph(t - 1), parser).size() >= 2) out.push_back(t);
  }
  return out;
}

GensetReport& GensetReport::operator+=(const GensetReport& o) {
  documents += o.documents;
  without_eligible_paragraph += o.without_eligible_paragraph;
  built += o.built;
  skipped_unresolvable += o.skipped_unresolvable;
  diagnostics.insert(diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
  return *this;
}

GensetBuilder::GensetBuilder(const CitationParser& parser,
                             const CorpusKeyIndex& keys,
                             std::span<const CaseDocument> corpus,
                             const InvertedIndex& passage_index,
                             GensetOptions options)
    : parser_(parser),
      keys_(keys),
      passage_index_(passage_index),
      options_(std::move(options)) {
  for (const CaseDocument& d : corpus) docs_by_id_.emplace(d.doc_id, &d);
}

std::string GensetBuilder::salient_text(const CaseDocument& cited,
                                        std::string_view gold,
                                        std::size_t max_words) const {
  const auto passages =
      chunk_document(cited, options_.chunk_window, options_.chunk_stride);
  if (passages.empty()) return {};

  std::vector<std::uint32_t> units;
  std::vector<std::size_t> local;  // passage position for each unit
  for (std::size_t i = 0; i < passages.size(); ++i) {
    const std::int64_t u = passage_index_.find_unit(passages[i].passage_id);
    if (u < 0) continue;
    units.push_back(static_cast<std::uint32_t>(u));
    local.push_back(i);
  }
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (!units.empty()) {
    const auto scores = bm25_score_units(passage_index_, gold, units, options_.bm25);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
  }
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < order.size() && chosen.size() < options_.salient_k; ++i) {
    chosen.push_back(local[order[i]]);
  }
  if (chosen.empty()) chosen.push_back(0);  // passages missing from the index
  std::sort(chosen.begin(), chosen.end());

  // Merge overlapping word ranges so shared words appear once.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t i : chosen) {
    const auto& p = passages[i];
    if (!ranges.empty() && p.word_start <= ranges.back().second) {
      ranges.back().second = std::max(ranges.back().second, p.word_end);
    } else {
      ranges.emplace_back(p.word_start, p.word_end);
    }
  }
  const auto words = tokenize_words(cited.text);
  std::string out;
  for (const auto& [a, b] : ranges) {
    if (a >= b) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(cited.text, words[a].start, words[b - 1].end - words[a].start);
  }
  return first_words(out, max_words);
}

std::optional<GenerationInstance> GensetBuilder::build_instance(
    const CaseDocument& doc, std::size_t t, std::string* why) const {
  auto fail = [&](std::string msg) -> std::optional<GenerationInstance> {
    if (why) *why = std::move(msg);
    return std::nullopt;
  };
  const std::size_t n = doc.paragraphs.size();
  if (t < 2 || t > n || t < 2 * n / 3 || t + 2 > n) {
    return fail("paragraph " + std::to_string(t) + " outside the eligible range");
  }
  const std::string_view gold = doc.paragraph(t - 1);
  const auto groups = citation_groups(gold, parser_);
  if (groups.size() < 2) return fail("gold paragraph cites fewer than two cases");

  GenerationInstance inst;
  inst.doc_id = doc.doc_id;
  inst.t = t;
  inst.paragraph_count = n;
  inst.instance_id = doc.doc_id + "_p" + std::to_string(t);
  inst.gold = std::string(gold);
  const std::size_t prefix_end = doc.paragraphs[t - 2].end;
  inst.prefix = doc.text.substr(0, prefix_end);

  std::vector<std::pair<CitationKey, const CaseDocument*>> resolved;
  std::set<std::string> used_docs;
  for (const auto& g : groups) {
    inst.cited_keys.push_back(g.front());
    auto hit = keys_.resolve_first(g);
    if (!hit) continue;
    auto it = docs_by_id_.find(hit->second);
    if (it == docs_by_id_.end()) continue;
    if (!used_docs.insert(hit->second).second) continue;
    resolved.emplace_back(g.front(), it->second);
  }
  if (resolved.size() < 2) {
    return fail("only " + std::to_string(resolved.size()) +
                " cited case(s) resolve to the corpus");
  }
  const std::size_t cap = options_.word_budget / resolved.size();
  for (const auto& [key, cited] : resolved) {
    inst.references.push_back({key, cited->doc_id, salient_text(*cited, gold, cap)});
  }
  inst.prompt_with_refs = render_prompt(inst, true);
  inst.prompt_without_refs = render_prompt(inst, false);
  return inst;
}

std::optional<std::size_t> GensetBuilder::sample_paragraph(
    const CaseDocument& doc) const {
  const auto eligible = select_reference_paragraphs(doc, parser_);
  if (eligible.empty()) return std::nullopt;
  const std::uint64_t h = fnv1a(doc.doc_id);
  std::seed_seq seq{static_cast<std::uint32_t>(options_.seed),
                    static_cast<std::uint32_t>(options_.seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  return eligible[rng() % eligible.size()];
}

std::vector<GenerationInstance> GensetBuilder::build(
    std::span<const CaseDocument> docs, GensetReport& report,
    std::size_t threads) const {
  std::vector<std::optional<GenerationInstance>> slots(docs.size());
  std::vector<GensetReport> partial(docs.size());

  auto work = [&](std::size_t i) {
    GensetReport& r = partial[i];
    r.documents = 1;
    const CaseDocument& doc = docs[i];
    const auto t = sample_paragraph(doc);
    if (!t) {
      ++r.without_eligible_paragraph;
      return;
    }
    std::string why;
    slots[i] = build_instance(doc, *t, &why);
    if (slots[i]) {
      ++r.built;
    } else {
      ++r.skipped_unresolvable;
      r.diagnostics.push_back(doc.doc_id + ": " + why);
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, docs.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < docs.size();) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<GenerationInstance> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    report += partial[i];
    if (slots[i]) out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::string render_prompt(const GenerationInstance& instance, bool with_refs) {
  if (instance.prefix.empty()) {
    throw std::invalid_argument("render_prompt: empty prefix");
  }
  std::string out;
  if (with_refs) {
    out += "Here are some reference articles for legal cases:\n";
    for (const auto& ref : instance.references) {
      out += "# Reference case " + ref.key.to_string() + "\n";
      out += ref.text + "\n";
    }
    out += "\n";
  }
  out += "Here is the text I've written so far:\n# Paragrah\n";
  out += instance.prefix;
  out += "\n\nContinue to write it following the style of my writeup. "
         "Your answer contains 100 to 400 words. ";
  if (with_refs) {
    out += "You must explicitly use the reference cases and mention their "
           "reference ids, i.e. ";
    for (std::size_t i = 0; i < instance.references.size(); ++i) {
      if (i) out += ", ";
      out += instance.references[i].key.to_string();
    }
    out += ". ";
  }
  out += "Wrap your answer with <answer></answer>. Make your answer concise "
         "and avoid redundant languages.";
  return out;
}

DensityProfile citation_density_profile(std::span<const CaseDocument> docs,
                                        const CitationParser& parser) {
  if (docs.empty()) {
    throw std::invalid_argument("citation_density_profile: no documents");
  }
  DensityProfile prof;
  for (const CaseDocument& doc : docs) {
    const std::size_t n = doc.paragraphs.size();
    if (n == 0) continue;
    const auto spans = parser.parse(doc.text);
    std::size_t si = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const ParagraphSpan& p = doc.paragraphs[i];
      const std::size_t decile = i * 10 / n;
      const std::size_t w = count_words(doc.paragraph(i));
      prof.words[decile] += w;
      prof.total_words += w;
      while (si < spans.size() && spans[si].start < p.start) ++si;
      for (; si < spans.size() && spans[si].start < p.end; ++si) {
        if (spans[si].kind == CitationKind::case_citation) ++prof.citations[decile];
      }
    }
  }
  for (std::size_t d = 0; d < 10; ++d) {
    prof.densities[d] =
        prof.words[d] == 0 ? 0.0 : 100.0 * static_cast<double>(prof.citations[d]) /
                                       static_cast<double>(prof.words[d]);
  }
  return prof;
}

void write_genset(std::ostream& out, std::span<const GenerationInstance> instances) {
  for (const auto& inst : instances) {
    json j;
    j["instance_id"] = inst.instance_id;
    j["doc_id"] = inst.doc_id;
    j["t"] = inst.t;
    j["paragraph_count"] = inst.paragraph_count;
    j["prefix"] = inst.prefix;
    j["gold"] = inst.gold;
    json keys = json::array();
    for (const auto& k : inst.cited_keys) keys.push_back(k.to_string());
    j["cited_keys"] = keys;
    json refs = json::array();
    for (const auto& r : inst.references) {
      refs.push_back({{"key", r.key.to_string()}, {"doc_id", r.doc_id}, {"text", r.text}});
    }
    j["references"] = refs;
    j["prompt_with_refs"] = inst.prompt_with_refs;
    j["prompt_without_refs"] = inst.prompt_without_refs;
    j["salience"] = inst.salience;
    out << j.dump() << '\n';
  }
}

std::vector<GenerationInstance> read_genset(std::istream& in) {
  static const CitationParser key_parser;
  auto key_of = [](const std::string& s) {
    auto k = key_parser.parse_key(s);
    if (!k) throw DataError("bad citation key: " + s);
    return *k;
  };
  std::vector<GenerationInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      GenerationInstance inst;
      inst.instance_id = j.at("instance_id").get<std::string>();
      inst.doc_id = j.at("doc_id").get<std::string>();
      inst.t = j.at("t").get<std::size_t>();
      inst.paragraph_count = j.value("paragraph_count", std::size_t{0});
      inst.prefix = j.at("prefix").get<std::string>();
      inst.gold = j.at("gold").get<std::string>();
      for (const auto& k : j.at("cited_keys")) inst.cited_keys.push_back(key_of(k.get<std::string>()));
      for (const auto& r : j.at("references")) {
        inst.references.push_back({key_of(r.at("key").get<std::string>()),
                                   r.value("doc_id", std::string()),
                                   r.at("text").get<std::string>()});
      }
      inst.prompt_with_refs = j.value("prompt_with_refs", std::string());
      inst.prompt_without_refs = j.value("prompt_without_refs", std::string());
      inst.salience = j.value("salience", std::string("bm25"));
      out.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw DataError("genset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace clerc
