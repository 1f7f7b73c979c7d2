"""Orchestration shared by the CLI subcommands.

Per-topic work (candidate retrieval, sentence scoring, reranking) is
independent across topics and may run on a thread pool; results are
always reduced in topic order so output never depends on thread count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus_io import Document, Qrels, RunEntry, load_corpus
from .errors import ScorerError
from .evidence_fusion import FusionParams, rerank, to_run_entries, top_k_sentences
from .inverted_index import ScoredDoc
from .scorer_gateway import ScoreCache, SentenceScorer
from .text_analysis import Sentence, split_sentences

logger = logging.getLogger(__name__)


def collect_documents(path: str | Path, format: str, wanted_ids: set[str],
                      default_lang: str = "en") -> dict[str, Document]:
    """Stream the corpus once, keeping only the documents named in
    wanted_ids (the candidate union), so memory stays proportional to
    the candidate set."""
    docs: dict[str, Document] = {}
    for doc in load_corpus(path, format, default_lang):
        if doc.doc_id in wanted_ids:
            docs[doc.doc_id] = doc
    missing = wanted_ids - docs.keys()
    if missing:
        some = ", ".join(sorted(missing)[:5])
        logger.warning("%d candidate docs not found in corpus (%s...)", len(missing), some)
    return docs


def candidate_sentences(candidates: Sequence[ScoredDoc], docs: Mapping[str, Document],
                        max_chars: int = 2000) -> dict[str, list[Sentence]]:
    """Split every candidate document into sentences; absent documents
    (not in the corpus slice) get no sentences."""
    result: dict[str, list[Sentence]] = {}
    for cand in candidates:
        doc = docs.get(cand.doc_id)
        if doc is None:
            result[cand.doc_id] = []
        else:
            result[cand.doc_id] = split_sentences(doc.lang, doc.contents,
                                                  doc_id=doc.doc_id, max_chars=max_chars)
    return result


def score_topic(scorer: SentenceScorer, topic_id: str, query: str,
                doc_sentences: Mapping[str, list[Sentence]],
                cache: ScoreCache | None = None,
                on_error: str = "fail") -> dict[str, list[float]]:
    """Score all candidate sentences for one topic, batching across
    documents.  on_error="zero" substitutes 0.0 for every unscored
    sentence instead of propagating scorer failures.
    """
    bound = scorer.for_topic(topic_id)
    scores: dict[str, list[float]] = {}
    pending: list[tuple[str, list[Sentence]]] = []
    for doc_id in doc_sentences:
        sentences = doc_sentences[doc_id]
        if not sentences:
            scores[doc_id] = []
            continue
        if cache is not None:
            hit = cache.get_doc(bound.fingerprint, query, doc_id, len(sentences))
            if hit is not None:
                scores[doc_id] = hit
                continue
        pending.append((doc_id, sentences))

    flat: list[Sentence] = [s for _, sentences in pending for s in sentences]
    try:
        flat_scores = bound.score_sentences(query, flat)
    except ScorerError:
        if on_error != "zero":
            raise
        logger.warning("scorer failed for topic %s; substituting zero scores", topic_id)
        flat_scores = [0.0] * len(flat)
    pos = 0
    for doc_id, sentences in pending:
        doc_scores = flat_scores[pos:pos + len(sentences)]
        pos += len(sentences)
        scores[doc_id] = doc_scores
        if cache is not None:
            cache.put_doc(bound.fingerprint, query, doc_id, doc_scores)
    return scores


def score_topics_parallel(scorer: SentenceScorer,
                          topic_work: Sequence[tuple[str, str, Mapping[str, list[Sentence]]]],
                          cache: ScoreCache | None = None, on_error: str = "fail",
                          threads: int = 1) -> dict[str, dict[str, list[float]]]:
    """Map score_topic over (topic_id, query, doc_sentences) tuples,
    preserving input order in the result regardless of thread count."""

    def work(item):
        topic_id, query, doc_sentences = item
        return topic_id, score_topic(scorer, topic_id, query, doc_sentences,
                                     cache=cache, on_error=on_error)

    if threads <= 1:
        return dict(work(item) for item in topic_work)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return dict(pool.map(work, topic_work))


@dataclass(frozen=True)
class TopicTable:
    """Precomputed per-topic arrays for fast grid evaluation.

    Rows are candidates sorted by doc_id so that a stable descending
    sort on fused scores reproduces the doc_id-ascending tie rule.
    """

    topic_id: str
    doc_ids: tuple[str, ...]
    s_r: np.ndarray          # (n,) retrieval scores
    sent: np.ndarray         # (n, 3) top-3 sentence scores, zero-padded
    relevant: np.ndarray     # (n,) bool
    n_relevant_total: int    # relevant count in qrels, retrieved or not


def build_topic_table(topic_id: str, candidates: Sequence[ScoredDoc],
                      sentence_scores: Mapping[str, Sequence[float]],
                      qrels: Qrels) -> TopicTable:
    order = sorted(range(len(candidates)), key=lambda i: candidates[i].doc_id)
    doc_ids = tuple(candidates[i].doc_id for i in order)
    s_r = np.array([candidates[i].score for i in order], dtype=np.float64)
    sent = np.zeros((len(order), 3), dtype=np.float64)
    for row, i in enumerate(order):
        top = top_k_sentences(sentence_scores[candidates[i].doc_id], 3)
        for col, (_, score) in enumerate(top):
            sent[row, col] = score
    relevant = np.array([qrels.is_relevant(topic_id, d) for d in doc_ids], dtype=bool)
    return TopicTable(topic_id, doc_ids, s_r, sent,
                      relevant, qrels.relevant_count(topic_id))


def fused_table_scores(table: TopicTable, params: FusionParams) -> np.ndarray:
    # Accumulate weight terms left to right, matching the scalar fuse()
    # exactly so both paths order ties identically.
    sentence_term = params.weights[0] * table.sent[:, 0]
    for i in range(1, params.k):
        sentence_term += params.weights[i] * table.sent[:, i]
    return params.alpha * table.s_r + (1.0 - params.alpha) * sentence_term


def table_average_precision(table: TopicTable, params: FusionParams) -> float:
    """AP of the fused ranking; requires the topic to have relevant docs."""
    assert table.n_relevant_total > 0, f"topic {table.topic_id} has no relevant docs"
    fused = fused_table_scores(table, params)
    order = np.argsort(-fused, kind="stable")
    rel = table.relevant[order]
    if not rel.any():
        return 0.0
    cum = np.cumsum(rel)
    ranks = np.arange(1, len(rel) + 1)
    return float((cum[rel] / ranks[rel]).sum() / table.n_relevant_total)


def make_eval_fn(tables: Mapping[str, TopicTable]):
    """Adapt topic tables to the tuning interface: params, topics -> AP."""
    def eval_fn(params: FusionParams, topic_ids: Sequence[str]) -> dict[str, float]:
        return {t: table_average_precision(tables[t], params) for t in topic_ids}
    return eval_fn


def rerank_topics(topic_candidates: Mapping[str, Sequence[ScoredDoc]],
                  topic_sentence_scores: Mapping[str, Mapping[str, Sequence[float]]],
                  params_of: Mapping[str, FusionParams], tag: str) -> list[RunEntry]:
    """Produce run entries for each topic under its own parameters
    (per-fold parameters during cross-validation), topics in sorted order."""
    entries: list[RunEntry] = []
    for topic_id in sorted(topic_candidates):
        ranked = rerank(topic_candidates[topic_id],
                        topic_sentence_scores[topic_id], params_of[topic_id])
        entries.extend(to_run_entries(topic_id, ranked, tag))
    return entries
