"""In-memory inverted index and BM25 candidate retrieval.

Scoring uses the non-negative IDF ln(1 + (N - df + 0.5) / (df + 0.5))
and term weight tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl)),
with k1=0.9, b=0.4 by default.  Duplicate query terms are collapsed.
search() accumulates contributions in the same term order as
bm25_score(), so both paths yield bit-identical scores.
"""

from __future__ import annotations

import gzip
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus_io import Document
from .errors import DataError
from .text_analysis import Analyzer, tokenize


@dataclass(frozen=True)
class BM25Params:
    k1: float = 0.9
    b: float = 0.4


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float


@dataclass
class InvertedIndex:
    """Postings, document lengths and corpus statistics backing BM25.

    Postings lists are sorted by internal doc id; the index is immutable
    once built and serves concurrent searches without locks.
    """

    postings: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    doc_lengths: list[int] = field(default_factory=list)
    doc_ids: list[str] = field(default_factory=list)
    analyzer_fingerprint: str = ""
    _id_of: dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def avgdl(self) -> float:
        return sum(self.doc_lengths) / len(self.doc_lengths) if self.doc_lengths else 0.0

    def internal_id(self, doc_id: str) -> int:
        try:
            return self._id_of[doc_id]
        except KeyError:
            raise DataError(f"unknown doc_id {doc_id!r}") from None

    def doc_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def term_frequency(self, term: str, doc_id: str) -> int:
        internal = self.internal_id(doc_id)
        for did, tf in self.postings.get(term, ()):
            if did == internal:
                return tf
        return 0


def build_index(documents: Iterable[Document], analyzer: Analyzer) -> InvertedIndex:
    """Build an index from a document stream; term frequencies are exact
    token counts from the analyzer."""
    index = InvertedIndex(analyzer_fingerprint=analyzer.fingerprint())
    for doc in documents:
        if doc.doc_id in index._id_of:
            raise DataError(f"duplicate doc_id {doc.doc_id!r}")
        internal = len(index.doc_ids)
        index._id_of[doc.doc_id] = internal
        index.doc_ids.append(doc.doc_id)
        terms = tokenize(analyzer, doc.contents)
        index.doc_lengths.append(len(terms))
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        for term, tf in counts.items():
            index.postings.setdefault(term, []).append((internal, tf))
    return index


def idf(n_docs: int, doc_freq: int) -> float:
    """Non-negative IDF: ln(1 + (N - df + 0.5) / (df + 0.5))."""
    return math.log(1.0 + (n_docs - doc_freq + 0.5) / (doc_freq + 0.5))


def term_weight(tf: int, doc_len: int, avgdl: float, params: BM25Params) -> float:
    """Saturating tf weight with length normalization; 0 when tf is 0."""
    if tf == 0:
        return 0.0
    norm = 1.0 - params.b + params.b * doc_len / avgdl
    return tf * (params.k1 + 1.0) / (tf + params.k1 * norm)


def _unique_terms(terms: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(terms))


def bm25_score(index: InvertedIndex, query_terms: Iterable[str], doc_id: str,
               params: BM25Params = BM25Params()) -> float:
    """Score one document against a query; terms absent from the corpus
    contribute 0."""
    internal = index.internal_id(doc_id)
    doc_len = index.doc_lengths[internal]
    avgdl = index.avgdl
    score = 0.0
    for term in _unique_terms(query_terms):
        posting = index.postings.get(term)
        if not posting:
            continue
        tf = 0
        for did, f in posting:
            if did == internal:
                tf = f
                break
        if tf == 0:
            continue
        score += idf(index.n_docs, len(posting)) * term_weight(tf, doc_len, avgdl, params)
    return score


def search(index: InvertedIndex, query: str, analyzer: Analyzer, k: int,
           params: BM25Params = BM25Params()) -> list[ScoredDoc]:
    """Top-k documents with nonzero term overlap, score descending and
    ties broken by doc_id ascending."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if analyzer.fingerprint() != index.analyzer_fingerprint:
        raise DataError(
            "analyzer does not match the one used to build the index: "
            f"{analyzer.fingerprint()} != {index.analyzer_fingerprint}")
    if index.n_docs == 0:
        return []
    avgdl = index.avgdl
    accum: dict[int, float] = {}
    for term in _unique_terms(tokenize(analyzer, query)):
        posting = index.postings.get(term)
        if not posting:
            continue
        term_idf = idf(index.n_docs, len(posting))
        for internal, tf in posting:
            w = term_idf * term_weight(tf, index.doc_lengths[internal], avgdl, params)
            accum[internal] = accum.get(internal, 0.0) + w
    ranked = sorted(accum.items(), key=lambda item: (-item[1], index.doc_ids[item[0]]))
    return [ScoredDoc(index.doc_ids[i], s) for i, s in ranked[:k]]


SNAPSHOT_FORMAT = "xlrank-index"
SNAPSHOT_VERSION = 1


def save_index(index: InvertedIndex, path: str | Path,
               analyzer: Analyzer | None = None) -> None:
    """Write a single-file JSON snapshot (gzipped when path ends in .gz).

    Passing the analyzer embeds its full config so searches against the
    loaded snapshot can rebuild an identical analyzer.
    """
    payload = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "analyzer_fingerprint": index.analyzer_fingerprint,
        "analyzer": None if analyzer is None else {
            "lang": analyzer.lang,
            "lowercase": analyzer.lowercase,
            "mode": analyzer.mode,
            "stopwords": sorted(analyzer.stopwords) if analyzer.stopwords else None,
        },
        "doc_ids": index.doc_ids,
        "doc_lengths": index.doc_lengths,
        "postings": {term: [[d, f] for d, f in plist] for term, plist in index.postings.items()},
    }
    data = json.dumps(payload, ensure_ascii=False)
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(data)
    else:
        path.write_text(data, encoding="utf-8")


def load_snapshot(path: str | Path) -> tuple[InvertedIndex, Analyzer | None]:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != SNAPSHOT_FORMAT:
        raise DataError(f"{path}: not an index snapshot")
    if payload.get("version") != SNAPSHOT_VERSION:
        raise DataError(f"{path}: unsupported snapshot version {payload.get('version')}")
    index = InvertedIndex(
        postings={term: [(int(d), int(f)) for d, f in plist]
                  for term, plist in payload["postings"].items()},
        doc_lengths=[int(n) for n in payload["doc_lengths"]],
        doc_ids=[str(d) for d in payload["doc_ids"]],
        analyzer_fingerprint=payload["analyzer_fingerprint"],
    )
    index._id_of.update({doc_id: i for i, doc_id in enumerate(index.doc_ids)})
    analyzer = None
    cfg = payload.get("analyzer")
    if cfg is not None:
        analyzer = Analyzer(
            lang=cfg["lang"], lowercase=cfg["lowercase"], mode=cfg["mode"],
            stopwords=frozenset(cfg["stopwords"]) if cfg["stopwords"] else None)
    return index, analyzer


def load_index(path: str | Path) -> InvertedIndex:
    return load_snapshot(path)[0]
