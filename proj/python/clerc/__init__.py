"""Case-law citation parsing, BM25 retrieval and benchmark metrics."""

from ._clerc import (
    CaseDocument,
    CitationParser,
    ConfigError,
    DataError,
    Index,
    Passage,
    __version__,
    build_queries,
    chunk_document,
    citation_report,
    load_corpus,
    make_document,
    maxp,
    ndcg_at_k,
    recall_at_k,
    render_prompt,
    rouge,
    run_cli,
    score_generation,
)

__all__ = [
    "CaseDocument",
    "CitationParser",
    "ConfigError",
    "DataError",
    "Index",
    "Passage",
    "__version__",
    "build_queries",
    "chunk_document",
    "citation_report",
    "load_corpus",
    "make_document",
    "maxp",
    "ndcg_at_k",
    "recall_at_k",
    "render_prompt",
    "rouge",
    "run_cli",
    "score_generation",
]
