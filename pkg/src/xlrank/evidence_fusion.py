"""Combine document retrieval scores with top-k sentence evidence.

The fused document score is

    s_doc = alpha * s_r + (1 - alpha) * sum_i w_i * S_(i)

where s_r is the document's term-matching (BM25) score and S_(i) is the
i-th largest sentence relevance score, i = 1..k.  Documents with fewer
than k scored sentences contribute 0 for the missing slots.  w_1 is
pinned to 1: a free global scale on the sentence term would trade off
against alpha and make tuning unidentifiable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus_io import RunEntry
from .errors import DataError
from .inverted_index import ScoredDoc

MAX_TOP_SENTENCES = 3


@dataclass(frozen=True)
class FusionParams:
    alpha: float
    weights: tuple[float, ...]
    k: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DataError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k not in (1, 2, 3):
            raise DataError(f"k must be 1, 2 or 3, got {self.k}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != self.k:
            raise DataError(f"expected {self.k} weights, got {len(self.weights)}")
        if any(not 0.0 <= w <= 1.0 for w in self.weights):
            raise DataError(f"weights must be in [0, 1], got {self.weights}")
        if self.weights[0] != 1.0:
            raise DataError(f"w_1 is fixed at 1, got {self.weights[0]}")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "weights": list(self.weights), "k": self.k}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FusionParams":
        try:
            return cls(float(data["alpha"]), tuple(data["weights"]), int(data["k"]))
        except KeyError as exc:
            raise DataError(f"params missing field {exc}") from exc


def read_params(path: str | Path) -> FusionParams:
    return FusionParams.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_params(path: str | Path, params: FusionParams) -> None:
    Path(path).write_text(json.dumps(params.as_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class FusedDoc:
    doc_id: str
    s_r: float
    top_sentences: tuple[tuple[int, float], ...]
    s_doc: float


def top_k_sentences(sentence_scores: Sequence[float], k: int) -> list[tuple[int, float]]:
    """The k highest (sentence_index, score) pairs, score descending and
    ties by sentence index ascending."""
    indexed = sorted(enumerate(sentence_scores), key=lambda item: (-item[1], item[0]))
    return indexed[:k]


def fuse(params: FusionParams, s_r: float, sentence_scores: Sequence[float]) -> float:
    """Fused document score; depends only on the multiset of sentence
    scores, never their arrival order."""
    sentence_term = 0.0
    for w, (_, score) in zip(params.weights, top_k_sentences(sentence_scores, params.k)):
        sentence_term += w * score
    return params.alpha * s_r + (1.0 - params.alpha) * sentence_term


def rerank(candidates: Sequence[ScoredDoc],
           sentence_scores: Mapping[str, Sequence[float]],
           params: FusionParams) -> list[FusedDoc]:
    """Resort the candidate set by fused score, ties by doc_id ascending.

    Membership never changes.  Every candidate must be present in
    sentence_scores, possibly with an empty list; a missing entry means
    the document was never scored and raises.
    """
    fused: list[FusedDoc] = []
    for cand in candidates:
        if cand.doc_id not in sentence_scores:
            raise DataError(f"candidate {cand.doc_id!r} missing from sentence scores")
        scores = sentence_scores[cand.doc_id]
        fused.append(FusedDoc(
            doc_id=cand.doc_id,
            s_r=cand.score,
            top_sentences=tuple(top_k_sentences(scores, params.k)),
            s_doc=fuse(params, cand.score, scores),
        ))
    fused.sort(key=lambda d: (-d.s_doc, d.doc_id))
    return fused


def normalize_min_max(candidates: Sequence[ScoredDoc]) -> list[ScoredDoc]:
    """Optional per-query min-max rescaling of retrieval scores to [0, 1];
    constant score lists map to 0."""
    if not candidates:
        return []
    lo = min(c.score for c in candidates)
    hi = max(c.score for c in candidates)
    span = hi - lo
    if span == 0.0:
        return [ScoredDoc(c.doc_id, 0.0) for c in candidates]
    return [ScoredDoc(c.doc_id, (c.score - lo) / span) for c in candidates]


def to_run_entries(topic_id: str, ranked: Iterable[FusedDoc], tag: str) -> list[RunEntry]:
    return [
        RunEntry(topic_id, doc.doc_id, rank, doc.s_doc, tag)
        for rank, doc in enumerate(ranked, start=1)
    ]
