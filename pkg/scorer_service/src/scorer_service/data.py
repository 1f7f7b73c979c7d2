"""Training data: (query, sentence, label) triples.

Canonical format is JSONL with fields query/sentence/label.  A converter
builds that file from judged retrieval data (topics + short documents +
qrels) when such a source is available; any triple source works.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


@dataclass(frozen=True)
class TrainExample:
    query: str
    sentence: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not self.query or not self.sentence:
            raise ValueError("query and sentence must be non-empty")


def load_examples(path: str | Path) -> list[TrainExample]:
    examples: list[TrainExample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                examples.append(TrainExample(str(record["query"]),
                                             str(record["sentence"]),
                                             int(record["label"])))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad training example: {exc}") from exc
    return examples


def write_examples(path: str | Path, examples: Iterable[TrainExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps({"query": ex.query, "sentence": ex.sentence,
                                 "label": ex.label}, ensure_ascii=False) + "\n")


def split_by_query(examples: list[TrainExample], validation_fraction: float,
                   seed: int) -> tuple[list[TrainExample], list[TrainExample]]:
    """Split train/validation by query, not by example, so near-duplicate
    pairs of one query never straddle the split."""
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation_fraction must be in (0, 1)")
    queries = sorted({ex.query for ex in examples})
    rng = random.Random(seed)
    rng.shuffle(queries)
    n_val = max(1, round(len(queries) * validation_fraction)) if len(queries) > 1 else 0
    val_queries = set(queries[:n_val])
    train = [ex for ex in examples if ex.query not in val_queries]
    val = [ex for ex in examples if ex.query in val_queries]
    return train, val


def convert_judged_collection(topics_path: str | Path, docs_path: str | Path,
                              qrels_path: str | Path, lang: str = "en") -> list[TrainExample]:
    """Build triples from a judged collection of short documents: every
    judged (topic, doc) pair becomes one example, grade >= 1 labelled 1.

    topics: JSONL {"id", "titles": {lang: ...}}; docs: JSONL
    {"id", "contents", ...}; qrels: "topic 0 doc grade" lines.
    """
    titles: dict[str, str] = {}
    with open(topics_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                titles[str(record["id"])] = str(record["titles"][lang])
    contents: dict[str, str] = {}
    with open(docs_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                contents[str(record["id"])] = str(record["contents"])
    examples: list[TrainExample] = []
    with open(qrels_path, encoding="utf-8") as fh:
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            topic_id, _, doc_id, grade = fields
            if topic_id in titles and contents.get(doc_id):
                examples.append(TrainExample(titles[topic_id], contents[doc_id],
                                             1 if int(grade) >= 1 else 0))
    return examples
