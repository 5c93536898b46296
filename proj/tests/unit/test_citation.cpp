#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "clerc/citation.hpp"
#include "clerc/errors.hpp"

using namespace clerc;

namespace {

const std::string kSummaryJudgment =
    "The moving party has the responsibility of informing the Court of portions of the "
    "record or affidavits that demonstrate the absence of a triable issue. Celotex Corp. v. "
    "Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986). The moving party "
    "may meet its burden of showing an absence of disputed material facts by demonstrating "
    "\xE2\x80\x9Cthat there is an absence of evidence to support the non-moving party\xE2\x80\x99s "
    "case.\xE2\x80\x9D Id. at 325, 106 S.Ct. 2548. Any doubt as to the existence of a genuine "
    "issue for trial is resolved against the moving party. Anderson v. Liberty Lobby, Inc., "
    "477 U.S. 242, 255, 106 S.Ct. 2505, 91 L.Ed.2d 202 (1986); Fed.R.Civ.P. 56(c).";

std::vector<std::string> keys_of(const std::vector<CitationSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(s.key ? s.key->to_string() : "-");
  return out;
}

std::string slice(const std::string& text, const SentenceBounds& b) {
  return text.substr(b.start, b.end - b.start);
}

const CitationSpan& first_of(const std::vector<CitationSpan>& spans, CitationKind kind) {
  for (const auto& s : spans) {
    if (s.kind == kind) return s;
  }
  FAIL("no span of the requested kind");
  return spans.front();
}

}  // namespace

TEST_CASE("parallel citation yields three case spans") {
  const CitationParser p;
  const auto spans = p.find_case_citations(
      "Celotex Corp. v. Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986)");
  CHECK(keys_of(spans) ==
        std::vector<std::string>{"477 U.S. 317", "106 S.Ct. 2548", "91 L.Ed.2d 265"});
  REQUIRE(spans[0].pincite);
  CHECK(*spans[0].pincite == 322);
}

TEST_CASE("parse assigns parallel groups") {
  const CitationParser p;
  const auto spans = p.parse(kSummaryJudgment);
  std::vector<std::size_t> groups;
  for (const auto& s : spans) {
    if (s.kind == CitationKind::case_citation) groups.push_back(s.group);
  }
  REQUIRE(groups.size() == 7);
  CHECK(groups[0] == groups[1]);
  CHECK(groups[1] == groups[2]);
  CHECK(groups[3] == groups[0]);  // "Id. at 325, 106 S.Ct. 2548" joins Celotex
  CHECK(groups[4] != groups[0]);
  CHECK(groups[4] == groups[6]);
}

TEST_CASE("no citations in plain prose") {
  const CitationParser p;
  CHECK(p.parse("no citations here").empty());
}

TEST_CASE("pincite and court parenthetical are absorbed") {
  const CitationParser p;
  const std::string t = "51 F.3d 1449, 1459 (9th Cir.1995)";
  const auto spans = p.find_case_citations(t);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].key->to_string() == "51 F.3d 1449");
  CHECK(*spans[0].pincite == 1459);
  CHECK(spans[0].end == t.size());
}

TEST_CASE("statute families") {
  const CitationParser p;
  CHECK(p.find_statute_citations("Fed.R.Civ.P. 56(c)").size() == 1);
  const auto u = p.find_statute_citations("see 29 U.S.C. § 1002(5) and more");
  REQUIRE(u.size() == 1);
  CHECK(u[0].raw == "29 U.S.C. § 1002(5)");
  CHECK(u[0].kind == CitationKind::statute);
  CHECK(p.find_statute_citations("section 3(5) of ERISA").empty());
  CHECK(p.find_case_citations("29 U.S.C. § 1002(5)").empty());
}

TEST_CASE("normalization of variants and stray letters") {
  const CitationParser p;
  CHECK(p.parse_key("477 U. S. 317, 322")->to_string() == "477 U.S. 317");
  CHECK(p.parse_key("953 F.2d 1073, 1078 (7th Cir.1992)")->to_string() == "953 F.2d 1073");
  CHECK(p.parse_key("P51 F.3d 1449, 1459 (9th Cir.1995)")->to_string() == "51 F.3d 1449");
  CHECK(p.parse_key("12 F. 3d 4")->to_string() == "12 F.3d 4");
  CHECK_FALSE(p.parse_key("12 Foo 4"));
}

TEST_CASE("normalize is the identity on rendered canonical keys") {
  const CitationParser p;
  std::mt19937 rng(3);
  const std::vector<std::string> reporters = {"U.S.", "S.Ct.", "L.Ed.2d", "F.2d", "F.3d",
                                              "F. Supp. 2d", "F.R.D.", "F."};
  for (int i = 0; i < 200; ++i) {
    CitationKey k{1 + static_cast<std::uint32_t>(rng() % 999),
                  reporters[rng() % reporters.size()],
                  1 + static_cast<std::uint32_t>(rng() % 3000)};
    const auto back = p.parse_key(k.to_string());
    REQUIRE(back);
    CHECK(*back == k);
  }
}

TEST_CASE("spans are ordered and non-overlapping") {
  const CitationParser p;
  const auto spans = p.parse(kSummaryJudgment);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    CHECK(spans[i].start < spans[i].end);
    CHECK(kSummaryJudgment.substr(spans[i].start, spans[i].end - spans[i].start) == spans[i].raw);
    if (i) CHECK(spans[i - 1].end <= spans[i].start);
  }
}

TEST_CASE("Id. resolves to the first key of the preceding group") {
  const CitationParser p;
  const auto spans = p.parse(kSummaryJudgment);
  const auto& id = first_of(spans, CitationKind::short_form);
  CHECK(id.raw == "Id. at 325");
  REQUIRE(id.key);
  CHECK(id.key->to_string() == "477 U.S. 317");
  CHECK(*id.pincite == 325);
}

TEST_CASE("Id. without a preceding case in the paragraph stays unresolved") {
  const CitationParser p;
  const auto spans = p.parse("Prior text. 1 U.S. 2 (1800).\nId. at 4.");
  const auto& id = first_of(spans, CitationKind::short_form);
  CHECK_FALSE(id.key);
}

TEST_CASE("citation sentence bounds on the worked example") {
  const CitationParser p;
  const auto spans = p.parse(kSummaryJudgment);
  const auto& celotex = first_of(spans, CitationKind::case_citation);
  const auto b = p.citation_sentence_bounds(kSummaryJudgment, celotex, spans);
  REQUIRE(b);
  CHECK(slice(kSummaryJudgment, *b) ==
        "Celotex Corp. v. Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986).");
  const auto& id = first_of(spans, CitationKind::short_form);
  const auto bi = p.citation_sentence_bounds(kSummaryJudgment, id, spans);
  REQUIRE(bi);
  CHECK(slice(kSummaryJudgment, *bi) == "Id. at 325, 106 S.Ct. 2548.");
}

TEST_CASE("short-form sentence is the whole string") {
  const CitationParser p;
  const std::string t = "Earlier, 477 U.S. 317 (1986). Id. at 325, 106 S.Ct. 2548.";
  const auto spans = p.parse(t);
  const auto& id = first_of(spans, CitationKind::short_form);
  CHECK(slice(t, *p.citation_sentence_bounds(t, id, spans)) == "Id. at 325, 106 S.Ct. 2548.");
}

TEST_CASE("sentence bounds fail without a terminal in the paragraph") {
  const CitationParser p;
  const std::string t = "Smith v. Jones, 10 F.3d 20 and then nothing\nNext paragraph.";
  const auto spans = p.parse(t);
  CHECK_FALSE(p.citation_sentence_bounds(t, spans.front(), spans));
}

TEST_CASE("court parenthetical period does not read as an abbreviation") {
  const CitationParser p;
  const std::string t = "Held so. Matzker v. Herr, 748 F.2d 1142, 1146 (7th Cir.1984). Next.";
  const auto spans = p.parse(t);
  CHECK(slice(t, *p.citation_sentence_bounds(t, spans.front(), spans)) ==
        "Matzker v. Herr, 748 F.2d 1142, 1146 (7th Cir.1984).");
}

TEST_CASE("direct quote pairs with the Id. citation") {
  const CitationParser p;
  const std::string t =
      "\xE2\x80\x9Cthat there is an absence of evidence to support the non-moving "
      "party\xE2\x80\x99s case.\xE2\x80\x9D Id. at 325, 106 S.Ct. 2548";
  // Give Id. something to resolve to.
  const std::string full = "Celotex Corp. v. Catrett, 477 U.S. 317 (1986). " + t;
  const auto quotes = p.extract_direct_quotes(full);
  REQUIRE(quotes.size() == 1);
  REQUIRE(quotes[0].paired_citation);
  CHECK(quotes[0].paired_citation->raw == "Id. at 325");
  CHECK(quotes[0].text.rfind("that there is", 0) == 0);
}

TEST_CASE("straight quotes are not direct quotes") {
  const CitationParser p;
  CHECK(p.extract_direct_quotes("He said \"hello\" 1 U.S. 2.").empty());
}

TEST_CASE("quote pairs with the nearer of two following citations") {
  const CitationParser p;
  const std::string t =
      "\xE2\x80\x9Cquoted words\xE2\x80\x9D 10 F.3d 20; and a long aside here, 30 F.3d 40.";
  const auto quotes = p.extract_direct_quotes(t);
  REQUIRE(quotes.size() == 1);
  CHECK(quotes[0].paired_citation->key->to_string() == "10 F.3d 20");
}

TEST_CASE("unmatched opening mark is skipped") {
  const CitationParser p;
  const std::string t =
      "\xE2\x80\x9C" "dangling \xE2\x80\x9Cinner words\xE2\x80\x9D 10 F.3d 20.";
  const auto quotes = p.extract_direct_quotes(t);
  REQUIRE(quotes.size() == 1);
  CHECK(quotes[0].text == "inner words");
}

TEST_CASE("quotes beyond the pairing window stay unpaired") {
  const CitationParser p;
  const std::string t = "\xE2\x80\x9Cwords\xE2\x80\x9D " + std::string(400, 'x') + " 10 F.3d 20.";
  const auto quotes = p.extract_direct_quotes(t);
  REQUIRE(quotes.size() == 1);
  CHECK_FALSE(quotes[0].paired_citation);
}

TEST_CASE("reporter table from JSON") {
  std::istringstream in(R"({"version": 1, "reporters": {"Fed. Appx.": "Fed. Appx."}})");
  const CitationParser p(ReporterTable::from_json(in));
  CHECK(p.find_case_citations("12 Fed. Appx. 34").size() == 1);
  CHECK(p.find_case_citations("12 F.3d 34").empty());
  std::istringstream bad(R"({"reporters": []})");
  CHECK_THROWS_AS(ReporterTable::from_json(bad), DataError);
}

TEST_CASE("bundled reporter table loads") {
  std::ifstream in(std::string(CLERC_DATA_DIR) + "/reporters.json");
  REQUIRE(in);
  const auto table = ReporterTable::from_json(in);
  CHECK(table.canonical("F. 3d") == std::optional<std::string>("F.3d"));
}

TEST_CASE("labeled sentence accuracy is measured") {
  std::ifstream in(std::string(CLERC_DATA_DIR) + "/sentence_labels.jsonl");
  REQUIRE(in);
  const auto sample = read_labeled_sentences(in);
  const auto acc = evaluate_sentence_extraction(CitationParser(), sample);
  CHECK(acc.total == sample.size());
  CHECK(acc.correct + acc.failures <= acc.total);
  CHECK(acc.accuracy() > 0.5);
}
