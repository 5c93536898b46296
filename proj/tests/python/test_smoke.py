import math
import os
from pathlib import Path

import pytest

import clerc

ROOT = Path(__file__).resolve().parents[2]
MINI = ROOT / "data" / "mini_corpus.jsonl"


def test_parse_citations_and_parallel_groups():
    p = clerc.CitationParser()
    text = "Hughes v. Rowe, 449 U.S. 5, 9, 101 S.Ct. 173 (1980). Id. at 10."
    spans = p.parse(text)
    cases = [s for s in spans if s["kind"] == "case"]
    assert [s["key"] for s in cases] == ["449 U.S. 5", "101 S.Ct. 173"]
    assert cases[0]["group"] == cases[1]["group"]
    assert cases[0]["pincite"] == 9
    ids = [s for s in spans if s["raw"].startswith("Id.")]
    assert ids and ids[0]["key"] == "449 U.S. 5"
    assert p.parse_key("748 F. 2d 1142") == "748 F.2d 1142"
    assert p.parse_key("no citation") is None


def test_citation_sentence_bounds():
    p = clerc.CitationParser()
    text = "First point. See Estelle v. Gamble, 429 U.S. 97 (1976). Next point."
    start, end = p.citation_sentence(text, text.index("429"))
    assert text[start:end] == "See Estelle v. Gamble, 429 U.S. 97 (1976)."


def test_chunking_overlap():
    doc = clerc.make_document("d1", [" ".join(f"w{i}" for i in range(700))])
    chunks = clerc.chunk_document(doc)
    assert [(c.word_start, c.word_end) for c in chunks] == [(0, 350), (175, 525), (350, 700)]
    assert chunks[1].passage_id == "d1#1"


def test_index_search_and_roundtrip(tmp_path):
    units = [("a", "alpha beta"), ("b", "beta gamma gamma"), ("c", "delta"), ("d", "epsilon")]
    idx = clerc.Index.build(units)
    hits = idx.search("gamma", k=5)
    assert hits[0][0] == "b" and hits[0][2] == 1
    n, df = 4, 1
    tf, dl, avg = 2, 3, 7 / 4
    expected = math.log((n - df + 0.5) / (df + 0.5)) * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * dl / avg))
    assert hits[0][1] == pytest.approx(expected, rel=1e-12)
    path = tmp_path / "x.idx"
    idx.save(str(path))
    back = clerc.Index.load(str(path))
    assert len(back) == 4 and back.search("gamma") == hits
    with pytest.raises(clerc.DataError):
        clerc.Index.load(str(ROOT / "data" / "reporters.json"))


def test_retrieval_metrics():
    assert clerc.ndcg_at_k(["a", "b", "c"], {"c"}, 10) == pytest.approx(0.5, abs=1e-12)
    assert clerc.recall_at_k(["a", "b", "c"], {"c", "z"}, 3) == 0.5
    assert clerc.maxp([("d1#0", 3.0), ("d2#1", 2.0), ("d1#4", 1.0)], 10)[1][0] == "d2"


def test_citation_metrics_example():
    rep = clerc.citation_report(
        ["404 U.S. 519", "449 U.S. 5", "101 S.Ct. 173", "748 F.2d 1142", "429 U.S. 97"],
        ["449 U.S. 5", "748 F.2d 1142", "429 U.S. 97", "953 F.2d 1073"],
        ["Earlier paragraphs with no case citations."],
    )
    assert (rep["cp"], rep["cr"], rep["cfp"]) == ((3, 5), (3, 4), (2, 5))


def test_rouge_and_prompt():
    assert clerc.rouge("a b c", "a c d", "rouge1")[2] == pytest.approx(2 / 3)
    prompt = clerc.render_prompt("Prefix text.", [("1 U.S. 2", "Ref.")], with_refs=False)
    assert "# Paragrah\nPrefix text." in prompt and "<answer></answer>" in prompt


def test_corpus_queries_and_cli(tmp_path):
    docs, rejected = clerc.load_corpus(str(MINI))
    assert len(docs) == 32 and not rejected
    qs = clerc.build_queries(docs, "all-removed")
    assert qs and all(q["central_key"] not in q["masked_text"] for q in qs)
    out = tmp_path / "docs.jsonl"
    rc, _, err = clerc.run_cli(["ingest", "--input", str(MINI), "--output", str(out)])
    assert rc == 0, err
    assert os.path.exists(str(out) + ".manifest.json")
    rc, _, err = clerc.run_cli(["chunk", "--input", str(out), "--output", "x", "--window", "0"])
    assert rc == 1 and "chunk_window" in err
