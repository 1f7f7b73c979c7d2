"""Ranking effectiveness metrics: AP, P@20 and NDCG@20.

Conventions follow the usual TREC evaluation tooling: unjudged documents
count as non-relevant, topics with no relevant documents are excluded
from means, AP is computed over the full ranking depth, and the P@20
denominator stays 20 even when fewer documents are retrieved.  NDCG uses
exponential gain 2^grade - 1 with a 1/log2(rank + 1) discount (equal to
linear gain on binarized qrels).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus_io import Qrels, RunEntry, run_by_topic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopicMetrics:
    topic_id: str
    ap: float
    p20: float
    ndcg20: float


@dataclass(frozen=True)
class RunMetrics:
    """Per-topic metrics for evaluated topics plus their arithmetic means."""

    topics: tuple[TopicMetrics, ...]
    mean_ap: float
    mean_p20: float
    mean_ndcg20: float
    skipped_topics: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "topics": [
                {"topic_id": t.topic_id, "ap": t.ap, "p20": t.p20, "ndcg20": t.ndcg20}
                for t in self.topics
            ],
            "mean": {"ap": self.mean_ap, "p20": self.mean_p20, "ndcg20": self.mean_ndcg20},
            "skipped_topics": list(self.skipped_topics),
        }


def average_precision(ranked_doc_ids: Sequence[str], judgments: dict[str, int]) -> float | None:
    """Mean of precision at each relevant rank, over the total number of
    relevant documents in the judgments; None when that total is zero."""
    total_relevant = sum(1 for g in judgments.values() if g >= 1)
    if total_relevant == 0:
        return None
    hits = 0
    precision_sum = 0.0
    for rank, doc_id in enumerate(ranked_doc_ids, start=1):
        if judgments.get(doc_id, 0) >= 1:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / total_relevant


def precision_at(ranked_doc_ids: Sequence[str], judgments: dict[str, int],
                 cutoff: int = 20) -> float:
    hits = sum(1 for doc_id in ranked_doc_ids[:cutoff] if judgments.get(doc_id, 0) >= 1)
    return hits / cutoff


def ndcg_at(ranked_doc_ids: Sequence[str], judgments: dict[str, int],
            cutoff: int = 20) -> float | None:
    """DCG@cutoff / ideal DCG@cutoff; None when no document has gain."""
    dcg = 0.0
    for rank, doc_id in enumerate(ranked_doc_ids[:cutoff], start=1):
        grade = judgments.get(doc_id, 0)
        if grade > 0:
            dcg += (2.0 ** grade - 1.0) / math.log2(rank + 1)
    ideal = sorted(judgments.values(), reverse=True)[:cutoff]
    idcg = 0.0
    for rank, grade in enumerate(ideal, start=1):
        if grade > 0:
            idcg += (2.0 ** grade - 1.0) / math.log2(rank + 1)
    if idcg == 0.0:
        return None
    return dcg / idcg


def evaluate_run(entries: Iterable[RunEntry], qrels: Qrels) -> RunMetrics:
    """Evaluate a run topic by topic, stable-sorted by topic_id.

    Topics missing from the qrels, or judged but with zero relevant
    documents, are skipped (with a warning) and excluded from the means.
    """
    grouped = run_by_topic(entries)
    judged_topics = set(qrels.topic_ids())
    per_topic: list[TopicMetrics] = []
    skipped: list[str] = []
    for topic_id in sorted(grouped):
        if topic_id not in judged_topics:
            logger.warning("topic %s not in qrels; excluded from evaluation", topic_id)
            skipped.append(topic_id)
            continue
        judgments = qrels.for_topic(topic_id)
        ranked = [e.doc_id for e in grouped[topic_id]]
        ap = average_precision(ranked, judgments)
        ndcg = ndcg_at(ranked, judgments)
        if ap is None or ndcg is None:
            logger.warning("topic %s has no relevant documents; excluded from means", topic_id)
            skipped.append(topic_id)
            continue
        per_topic.append(TopicMetrics(topic_id, ap, precision_at(ranked, judgments), ndcg))
    n = len(per_topic)
    return RunMetrics(
        topics=tuple(per_topic),
        mean_ap=sum(t.ap for t in per_topic) / n if n else 0.0,
        mean_p20=sum(t.p20 for t in per_topic) / n if n else 0.0,
        mean_ndcg20=sum(t.ndcg20 for t in per_topic) / n if n else 0.0,
        skipped_topics=tuple(skipped),
    )


def write_metrics_tsv(path: str | Path, metrics: RunMetrics) -> None:
    """trec_eval-style report: one "metric topic value" line per topic
    plus "metric all value" summary lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in metrics.topics:
            fh.write(f"ap\t{t.topic_id}\t{t.ap:.4f}\n")
            fh.write(f"p20\t{t.topic_id}\t{t.p20:.4f}\n")
            fh.write(f"ndcg20\t{t.topic_id}\t{t.ndcg20:.4f}\n")
        fh.write(f"ap\tall\t{metrics.mean_ap:.4f}\n")
        fh.write(f"p20\tall\t{metrics.mean_p20:.4f}\n")
        fh.write(f"ndcg20\tall\t{metrics.mean_ndcg20:.4f}\n")


def write_metrics_json(path: str | Path, metrics: RunMetrics) -> None:
    Path(path).write_text(json.dumps(metrics.as_dict(), indent=2) + "\n", encoding="utf-8")
