#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "clerc/errors.hpp"
#include "clerc/pipeline.hpp"
#include "clerc/query.hpp"
#include "clerc/retrieval.hpp"

using namespace clerc;
namespace fs = std::filesystem;

namespace {

std::string config_error_key(const std::string& text) {
  std::istringstream in(text);
  try {
    PipelineConfig::parse(in);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("clerc_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("config parses key = value with comments and quotes") {
  std::istringstream in("# comment\nchunk_window = 400\nview = \"all-removed\"  # trailing\n"
                        "micro_average = true\nseed = 0\n");
  const auto cfg = PipelineConfig::parse(in);
  CHECK(cfg.chunk_window == 400);
  CHECK(cfg.view == "all-removed");
  CHECK(cfg.micro_average);
  CHECK(cfg.seed == 0);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_key("chunk_windw = 3\n") == "chunk_windw");
  CHECK(config_error_key("chunk_window = 0\n") == "chunk_window");
  CHECK(config_error_key("bm25_b = 1.5\n") == "bm25_b");
  CHECK(config_error_key("view = sideways\n") == "view");
  CHECK(config_error_key("k = -3\n") == "k");
  CHECK(config_error_key("chunk_window = 100\nchunk_stride = 200\n") == "chunk_stride");
  CHECK(config_error_key("micro_average = maybe\n") == "micro_average");
}

TEST_CASE("config hash ignores threads") {
  PipelineConfig a, b;
  b.threads = 8;
  CHECK(a.hash() == b.hash());
  b.seed = 99;
  CHECK(a.hash() != b.hash());
  CHECK(a.entries().size() == PipelineConfig::keys().size());
}

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cli exit codes") {
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({}) == 1);
  CHECK(cli({"frobnicate"}) == 1);
  std::string err;
  CHECK(cli({"chunk", "--input", "x", "--output", "y", "--window", "0"}, &err) == 1);
  CHECK(err.find("chunk_window") != std::string::npos);
  CHECK(cli({"chunk", "--input", "/nonexistent/file", "--output", "y"}) == 2);
}

TEST_CASE("cli ingest and chunk with manifests; failures leave no outputs") {
  TempDir dir;
  {
    std::ofstream f(dir / "corpus.jsonl");
    f << R"({"id":"a","name":"A v. B","cite":"1 U.S. 1","opinions":[{"type":"m","text":"One two three.\n\nFour five."}]})"
      << "\n";
  }
  REQUIRE(cli({"ingest", "--input", dir / "corpus.jsonl", "--output", dir / "docs.jsonl"}) == 0);
  REQUIRE(cli({"chunk", "--input", dir / "docs.jsonl", "--output", dir / "p.jsonl",
               "--window", "3", "--stride", "2"}) == 0);
  CHECK(fs::exists(dir / "p.jsonl.manifest.json"));
  std::ifstream m(dir / "p.jsonl.manifest.json");
  std::stringstream ms;
  ms << m.rdbuf();
  CHECK(ms.str().find("\"passages\": 2") != std::string::npos);
  CHECK(ms.str().find("docs.jsonl") != std::string::npos);

  {
    std::ofstream f(dir / "broken.jsonl");
    f << "{not json\n";
  }
  CHECK(cli({"chunk", "--input", dir / "broken.jsonl", "--output", dir / "out.jsonl"}) == 2);
  CHECK_FALSE(fs::exists(dir / "out.jsonl"));
  CHECK_FALSE(fs::exists(dir / "out.jsonl.tmp"));
}

TEST_CASE("search --exclude-source drops the query's own document") {
  TempDir dir;
  const std::string corpus = std::string(CLERC_DATA_DIR) + "/mini_corpus.jsonl";
  REQUIRE(cli({"ingest", "--input", corpus, "--output", dir / "docs.jsonl"}) == 0);
  REQUIRE(cli({"chunk", "--input", dir / "docs.jsonl", "--output", dir / "p.jsonl"}) == 0);
  REQUIRE(cli({"build-queries", "--input", dir / "docs.jsonl", "--output", dir / "q.jsonl",
               "--qrels", dir / "qrels.txt"}) == 0);
  REQUIRE(cli({"index", "--input", dir / "p.jsonl", "--output", dir / "p.idx"}) == 0);
  REQUIRE(cli({"search", "--index", dir / "p.idx", "--queries", dir / "q.jsonl", "--output",
               dir / "run.trec", "--maxp", "--exclude-source", "--k", "5"}) == 0);
  std::ifstream qin(dir / "q.jsonl");
  std::map<std::string, std::string> source;
  for (const auto& q : read_queries(qin)) source[q.query_id] = q.doc_id;
  std::ifstream rin(dir / "run.trec");
  const auto runs = read_trec_run(rin);
  REQUIRE(runs.size() == source.size());
  for (const auto& [qid, run] : runs) {
    CHECK(run.entries.size() <= 5);
    for (const auto& e : run.entries) CHECK(e.unit_id != source.at(qid));
  }
}
