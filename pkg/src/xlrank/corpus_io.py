"""Corpus, topic, qrels and run file I/O.

Canonical corpus format is JSONL (one document per line with fields
``id``/``contents``/``lang``); a TREC-SGML reader covers legacy
collections.  Topics carry all language variants in one file so that
cross-lingual runs differ only by which variant is selected.  Qrels and
run files use the usual whitespace-separated TREC layouts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError

CORPUS_FORMATS = ("jsonl", "trec-sgml")


@dataclass(frozen=True)
class Document:
    doc_id: str
    contents: str
    lang: str = "en"


@dataclass(frozen=True)
class Topic:
    topic_id: str
    titles: dict[str, str]

    def query(self, lang: str) -> str:
        if lang not in self.titles:
            raise DataError(f"missing variant {lang} for {self.topic_id}")
        return self.titles[lang]


@dataclass
class Qrels:
    """Graded relevance judgments keyed by (topic_id, doc_id).

    Unjudged pairs are absent and treated as grade 0 by evaluation.
    """

    judgments: dict[tuple[str, str], int] = field(default_factory=dict)

    def grade(self, topic_id: str, doc_id: str) -> int:
        return self.judgments.get((topic_id, doc_id), 0)

    def is_relevant(self, topic_id: str, doc_id: str) -> bool:
        return self.grade(topic_id, doc_id) >= 1

    def topic_ids(self) -> list[str]:
        return sorted({t for t, _ in self.judgments})

    def for_topic(self, topic_id: str) -> dict[str, int]:
        return {d: g for (t, d), g in self.judgments.items() if t == topic_id}

    def relevant_count(self, topic_id: str) -> int:
        return sum(1 for (t, _), g in self.judgments.items() if t == topic_id and g >= 1)


@dataclass(frozen=True)
class RunEntry:
    topic_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


def load_corpus(path: str | Path, format: str = "jsonl",
                default_lang: str = "en") -> Iterator[Document]:
    """Stream documents from a corpus file, yielding each exactly once.

    Memory use is bounded by the largest single document; duplicate ids
    and malformed records raise DataError naming the offending line.
    """
    if format == "jsonl":
        yield from _load_jsonl(Path(path), default_lang)
    elif format == "trec-sgml":
        yield from _load_trec_sgml(Path(path), default_lang)
    else:
        raise DataError(f"unknown corpus format: {format!r} (expected one of {CORPUS_FORMATS})")


def _load_jsonl(path: Path, default_lang: str) -> Iterator[Document]:
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON record: {exc}") from exc
            if not isinstance(record, dict) or "id" not in record or "contents" not in record:
                raise DataError(f"{path}:{lineno}: record must be an object with 'id' and 'contents'")
            doc_id = str(record["id"])
            if not doc_id:
                raise DataError(f"{path}:{lineno}: empty doc id")
            if doc_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            yield Document(doc_id, str(record["contents"]), str(record.get("lang", default_lang)))


_DOCNO_RE = re.compile(r"<DOCNO>(.*?)</DOCNO>", re.DOTALL)
_TEXT_TAGS = ("TEXT", "HEADLINE", "TITLE")


def _load_trec_sgml(path: Path, default_lang: str) -> Iterator[Document]:
    # Line-oriented scan over <DOC> blocks keeps memory bounded by one document.
    seen: set[str] = set()
    buf: list[str] = []
    in_doc = False
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            if "<DOC>" in line:
                if in_doc:
                    raise DataError(f"{path}:{lineno}: nested <DOC>")
                in_doc = True
                buf = [line]
                continue
            if not in_doc:
                continue
            buf.append(line)
            if "</DOC>" in line:
                in_doc = False
                yield _parse_sgml_doc("".join(buf), path, lineno, seen, default_lang)
    if in_doc:
        raise DataError(f"{path}: unterminated <DOC> at end of file")


def _parse_sgml_doc(block: str, path: Path, lineno: int, seen: set[str],
                    default_lang: str) -> Document:
    m = _DOCNO_RE.search(block)
    if m is None:
        raise DataError(f"{path}:{lineno}: <DOC> block without <DOCNO>")
    doc_id = m.group(1).strip()
    if not doc_id:
        raise DataError(f"{path}:{lineno}: empty <DOCNO>")
    if doc_id in seen:
        raise DataError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
    seen.add(doc_id)
    parts: list[str] = []
    for tag in _TEXT_TAGS:
        for mt in re.finditer(rf"<{tag}>(.*?)</{tag}>", block, re.DOTALL):
            parts.append(mt.group(1).strip())
    return Document(doc_id, "\n".join(p for p in parts if p), default_lang)


def write_corpus(path: str | Path, documents: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps(
                {"id": doc.doc_id, "contents": doc.contents, "lang": doc.lang},
                ensure_ascii=False) + "\n")


def read_topics(path: str | Path, field_name: str = "titles") -> list[Topic]:
    """Read a topics JSONL file; ``field_name`` selects which variant map
    (titles by default) supplies the query strings."""
    topics: list[Topic] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON record: {exc}") from exc
            if "id" not in record or field_name not in record:
                raise DataError(f"{path}:{lineno}: topic must have 'id' and {field_name!r}")
            topic_id = str(record["id"])
            if topic_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate topic_id {topic_id!r}")
            seen.add(topic_id)
            variants = record[field_name]
            if not isinstance(variants, dict) or not variants:
                raise DataError(f"{path}:{lineno}: {field_name!r} must be a non-empty object")
            topics.append(Topic(topic_id, {str(k): str(v) for k, v in variants.items()}))
    return topics


def load_topics(path: str | Path, lang_select: str,
                field_name: str = "titles") -> list[tuple[str, str]]:
    """Return (topic_id, query) pairs in file order for one language variant."""
    return [(t.topic_id, t.query(lang_select)) for t in read_topics(path, field_name)]


def read_qrels(path: str | Path) -> Qrels:
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
            topic_id, _, doc_id, grade_s = fields
            try:
                grade = int(grade_s)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad grade {grade_s!r}") from exc
            if grade < 0:
                raise DataError(f"{path}:{lineno}: negative grade {grade}")
            qrels.judgments[(topic_id, doc_id)] = grade
    return qrels


def write_qrels(path: str | Path, qrels: Qrels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (topic_id, doc_id), grade in qrels.judgments.items():
            fh.write(f"{topic_id} 0 {doc_id} {grade}\n")


def write_run(path: str | Path, entries: Iterable[RunEntry]) -> None:
    """Write a run file, validating rank/score invariants first.

    Scores use repr formatting so that read_run(write_run(x)) == x.
    """
    entries = list(entries)
    _validate_run(entries, source="write_run")
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(f"{e.topic_id} Q0 {e.doc_id} {e.rank} {e.score!r} {e.tag}\n")


def read_run(path: str | Path) -> list[RunEntry]:
    entries: list[RunEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 6:
                raise DataError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
            topic_id, _, doc_id, rank_s, score_s, tag = fields
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad rank/score") from exc
            entries.append(RunEntry(topic_id, doc_id, rank, score, tag))
    _validate_run(entries, source=str(path))
    return entries


def _validate_run(entries: list[RunEntry], source: str) -> None:
    last_rank: dict[str, int] = {}
    last_score: dict[str, float] = {}
    seen: set[tuple[str, str]] = set()
    for e in entries:
        if e.rank < 1:
            raise DataError(f"{source}: rank {e.rank} < 1 for topic {e.topic_id}")
        key = (e.topic_id, e.doc_id)
        if key in seen:
            raise DataError(f"{source}: duplicate (topic, doc) pair {key}")
        seen.add(key)
        prev = last_rank.get(e.topic_id, 0)
        if e.rank != prev + 1:
            raise DataError(
                f"{source}: rank gap in topic {e.topic_id}: {prev} -> {e.rank}")
        if e.topic_id in last_score and e.score > last_score[e.topic_id]:
            raise DataError(
                f"{source}: score increases with rank in topic {e.topic_id} at rank {e.rank}")
        last_rank[e.topic_id] = e.rank
        last_score[e.topic_id] = e.score


def run_by_topic(entries: Iterable[RunEntry]) -> dict[str, list[RunEntry]]:
    grouped: dict[str, list[RunEntry]] = {}
    for e in entries:
        grouped.setdefault(e.topic_id, []).append(e)
    for topic_entries in grouped.values():
        topic_entries.sort(key=lambda e: e.rank)
    return grouped
