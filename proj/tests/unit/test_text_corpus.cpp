#include <doctest.h>

#include <random>
#include <sstream>

#include "clerc/corpus.hpp"
#include "clerc/text.hpp"

using namespace clerc;

namespace {

CaseDocument doc_with_words(std::size_t n) {
  CaseDocument d;
  d.doc_id = "d";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) d.text += ' ';
    d.text += "w" + std::to_string(i);
  }
  d.paragraphs = {{0, d.text.size()}};
  return d;
}

}  // namespace

TEST_CASE("tokenize_words splits on whitespace with byte offsets") {
  const auto w = tokenize_words("  ab c\n d ");
  REQUIRE(w.size() == 3);
  CHECK(w[0].start == 2);
  CHECK(w[0].end == 4);
  CHECK(w[2].start == 8);
  CHECK(count_words("") == 0);
}

TEST_CASE("normalize_record joins opinions and collapses single newlines") {
  RawCaseRecord r{"x", "A v. B", "1 F.3d 2", {{"majority", "A.\nB."}, {"dissent", "C."}}};
  const auto d = normalize_record(r);
  REQUIRE(d);
  CHECK(d->text == "A. B.\nC.");
  REQUIRE(d->paragraphs.size() == 2);
  CHECK(d->paragraph(0) == "A. B.");
  CHECK(d->paragraph(1) == "C.");
}

TEST_CASE("blank lines start paragraphs inside an opinion") {
  RawCaseRecord r{"x", "", "", {{"majority", "One\ntwo.\n\n\nThree   four."}}};
  const auto d = normalize_record(r);
  REQUIRE(d);
  CHECK(d->text == "One two.\nThree four.");
  CHECK(d->paragraphs.size() == 2);
}

TEST_CASE("records without text are rejected with a reason") {
  std::string why;
  CHECK_FALSE(normalize_record({"x", "", "", {{"majority", "  \n "}}}, &why));
  CHECK_FALSE(why.empty());
  CHECK_FALSE(normalize_record({"", "", "", {{"majority", "text"}}}, &why));
}

TEST_CASE("load_corpus keeps going past malformed lines and duplicates") {
  std::istringstream in(
      R"({"id":"a","name":"A","cite":"1 U.S. 1","opinions":[{"type":"m","text":"Hello."}]})"
      "\nnot json\n"
      R"({"id":"a","name":"A","cite":"1 U.S. 1","opinions":[{"type":"m","text":"Again."}]})"
      "\n");
  const auto res = load_corpus(in);
  CHECK(res.documents.size() == 1);
  CHECK(res.rejected.size() == 2);
  CHECK(res.rejected[0].line == 2);
}

TEST_CASE("documents round-trip through write_documents/read_documents") {
  RawCaseRecord r{"x", "A v. B", "1 F.3d 2", {{"majority", "P one.\n\nP two."}}};
  const std::vector<CaseDocument> docs = {*normalize_record(r)};
  std::stringstream ss;
  write_documents(ss, docs);
  const auto back = read_documents(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].text == docs[0].text);
  CHECK(back[0].paragraphs == docs[0].paragraphs);
  CHECK(back[0].reporter_cite == "1 F.3d 2");
}

TEST_CASE("chunker: 350 words give one chunk, 400 give two") {
  CHECK(chunk_document(doc_with_words(350)).size() == 1);
  const auto two = chunk_document(doc_with_words(400));
  REQUIRE(two.size() == 2);
  CHECK(two[1].word_start == 175);
  CHECK(two[1].word_end == 400);
  CHECK(two[1].passage_id == "d#1");
  CHECK(doc_of_passage(two[1].passage_id) == "d");
}

TEST_CASE("chunker rejects stride larger than window") {
  CHECK_THROWS_AS(chunk_document(doc_with_words(10), 100, 200), std::invalid_argument);
  CHECK_THROWS_AS(chunk_document(doc_with_words(10), 100, 0), std::invalid_argument);
}

TEST_CASE("chunker property: coverage, overlap and size on random lengths") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 2000;
    const auto d = doc_with_words(n);
    const auto chunks = chunk_document(d);
    REQUIRE(!chunks.empty());
    CHECK(chunks.front().word_start == 0);
    CHECK(chunks.back().word_end == n);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      CHECK(chunks[i].word_end - chunks[i].word_start <= 350);
      CHECK(count_words(chunks[i].text) == chunks[i].word_end - chunks[i].word_start);
      if (i) CHECK(chunks[i - 1].word_end - chunks[i].word_start == 175);
    }
  }
}

TEST_CASE("passages round-trip") {
  const auto ps = chunk_document(doc_with_words(500));
  std::stringstream ss;
  write_passages(ss, ps);
  const auto back = read_passages(ss);
  REQUIRE(back.size() == ps.size());
  CHECK(back[1].text == ps[1].text);
  CHECK(back[1].word_start == ps[1].word_start);
}
