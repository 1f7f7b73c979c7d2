"""Uniform interface to sentence relevance scorers.

Built-in scorers (constant, lexical overlap, clairvoyant) are pure and
deterministic; external scorers speak a small JSON protocol over HTTP or
over a child process's stdio.  Every scorer returns one score per input
sentence, order-aligned, in [0, 1].  Out-of-range or misaligned replies
from external scorers are protocol errors, never clamped or padded:
silent degradation would corrupt experiments.
"""

from __future__ import annotations

import itertools
import json
import shlex
import sqlite3
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import requests

from .corpus_io import Qrels
from .errors import DataError, ScorerProtocolError, ScorerTransportError
from .text_analysis import Analyzer, Sentence, tokenize

DEFAULT_BATCH_SIZE = 64


@dataclass(frozen=True)
class ScoreRequest:
    """One wire request: a query against an ordered batch of sentences."""

    request_id: str
    query: str
    sentences: tuple[str, ...]

    def __post_init__(self):
        if not self.sentences:
            raise DataError("a score request needs at least one sentence")

    def payload(self) -> dict:
        return {"request_id": self.request_id, "query": self.query,
                "sentences": list(self.sentences)}


@dataclass(frozen=True)
class ScoredSentence:
    """A sentence's relevance score, keyed back to its document."""

    doc_id: str
    sentence_index: int
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"sentence score {self.score!r} outside [0, 1]")


def attach_scores(sentences: Sequence[Sentence], scores: Sequence[float]) -> list[ScoredSentence]:
    if len(sentences) != len(scores):
        raise DataError(f"{len(scores)} scores for {len(sentences)} sentences")
    return [ScoredSentence(s.doc_id, s.index, score)
            for s, score in zip(sentences, scores)]


class SentenceScorer:
    """Base scorer: chunks work into batches and validates replies."""

    fingerprint = "scorer"
    batch_size = DEFAULT_BATCH_SIZE

    def score_sentences(self, query: str, sentences: Sequence[Sentence]) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(sentences), self.batch_size):
            chunk = sentences[start:start + self.batch_size]
            scores.extend(self._score_batch(query, list(chunk)))
        return scores

    def _score_batch(self, query: str, sentences: list[Sentence]) -> list[float]:
        raise NotImplementedError

    def for_topic(self, topic_id: str) -> "SentenceScorer":
        """Topic-bound view; the default scorer is topic-independent."""
        return self

    def close(self) -> None:
        pass


def score_batch(scorer: SentenceScorer, query: str,
                sentences: Sequence[Sentence | str]) -> list[float]:
    """Score sentences (plain strings allowed), order-aligned with input."""
    normalized = [
        s if isinstance(s, Sentence) else Sentence("", i, s)
        for i, s in enumerate(sentences)
    ]
    return scorer.score_sentences(query, normalized)


class ConstantScorer(SentenceScorer):
    def __init__(self, value: float = 0.5):
        if not 0.0 <= value <= 1.0:
            raise DataError(f"constant score must be in [0, 1], got {value}")
        self.value = value
        self.fingerprint = f"builtin:constant:{value}"

    def _score_batch(self, query, sentences):
        return [self.value] * len(sentences)


class LexicalOverlapScorer(SentenceScorer):
    """Fraction of unique query terms present in the sentence."""

    def __init__(self, analyzer: Analyzer):
        self.analyzer = analyzer
        self.fingerprint = f"builtin:lexical[{analyzer.fingerprint()}]"

    def _score_batch(self, query, sentences):
        query_terms = set(tokenize(self.analyzer, query))
        if not query_terms:
            return [0.0] * len(sentences)
        scores = []
        for sentence in sentences:
            terms = set(tokenize(self.analyzer, sentence.text))
            scores.append(len(query_terms & terms) / len(query_terms))
        return scores


class ClairvoyantScorer(SentenceScorer):
    """Judgment oracle: 1.0 for sentences of relevant documents, else 0.0.

    Upper-bounds what a perfect sentence classifier could achieve; any
    grade >= 1 counts as relevant.
    """

    def __init__(self, qrels: Qrels, topic_id: str | None = None):
        self.qrels = qrels
        self.topic_id = topic_id
        self.fingerprint = "builtin:clairvoyant"

    def for_topic(self, topic_id):
        return ClairvoyantScorer(self.qrels, topic_id)

    def _score_batch(self, query, sentences):
        if self.topic_id is None:
            raise DataError("clairvoyant scorer must be bound to a topic before scoring")
        return [
            1.0 if self.qrels.is_relevant(self.topic_id, s.doc_id) else 0.0
            for s in sentences
        ]


def clairvoyant_scorer(qrels: Qrels, topic_id: str) -> ClairvoyantScorer:
    return ClairvoyantScorer(qrels, topic_id)


def _validate_scores(raw, expected: int, request_id: str) -> list[float]:
    if not isinstance(raw, list) or len(raw) != expected:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ScorerProtocolError(
            f"expected {expected} scores, got {got}", request_id)
    scores: list[float] = []
    for value in raw:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScorerProtocolError(f"non-numeric score {value!r}", request_id)
        score = float(value)
        if score != score or not 0.0 <= score <= 1.0:
            raise ScorerProtocolError(f"score {score!r} outside [0, 1]", request_id)
        scores.append(score)
    return scores


class HttpScorer(SentenceScorer):
    """Client for the HTTP transport: POST /score, GET /health."""

    def __init__(self, base_url: str, timeout: float = 60.0, retries: int = 2,
                 batch_size: int = DEFAULT_BATCH_SIZE):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.batch_size = batch_size
        self.fingerprint = f"http:{self.base_url}"
        self._session = requests.Session()
        self._next_id = itertools.count()

    def health(self) -> dict:
        try:
            resp = self._session.get(f"{self.base_url}/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ScorerTransportError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ScorerTransportError(f"health check returned {resp.status_code}")
        return resp.json()

    def _score_batch(self, query, sentences):
        request = ScoreRequest(f"q{next(self._next_id)}", query,
                               tuple(s.text for s in sentences))
        request_id = request.request_id
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(f"{self.base_url}/score",
                                          json=request.payload(),
                                          timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(min(0.1 * (attempt + 1), 1.0))
                continue
            if resp.status_code != 200:
                raise ScorerTransportError(
                    f"scorer returned HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                payload = resp.json()
            except ValueError as exc:
                raise ScorerProtocolError(f"non-JSON response: {exc}", request_id) from exc
            if payload.get("request_id") != request_id:
                raise ScorerProtocolError(
                    f"response for wrong request {payload.get('request_id')!r}", request_id)
            return _validate_scores(payload.get("scores"), len(sentences), request_id)
        raise ScorerTransportError(f"scorer unreachable after {self.retries + 1} attempts: {last_error}")

    def close(self):
        self._session.close()


class StdioScorer(SentenceScorer):
    """Client for the stdio transport: newline-delimited JSON on a child
    process's stdin/stdout.  Several requests may be in flight at once;
    a reader thread collects replies, which may arrive out of order, and
    callers are matched to theirs by request_id."""

    def __init__(self, command: str, batch_size: int = DEFAULT_BATCH_SIZE,
                 timeout: float = 120.0):
        self.command = command
        self.batch_size = batch_size
        self.timeout = timeout
        self.fingerprint = f"stdio:{command}"
        self._proc = subprocess.Popen(
            shlex.split(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)
        self._write_lock = threading.Lock()
        self._cond = threading.Condition()
        self._pending: dict[str, dict] = {}
        self._reader_error: Exception | None = None
        self._eof = False
        self._next_id = itertools.count()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        try:
            for reply in self._proc.stdout:
                if not reply.strip():
                    continue
                try:
                    payload = json.loads(reply)
                    key = payload.get("request_id")
                    if not isinstance(key, str):
                        raise ScorerProtocolError("response without request_id")
                except (json.JSONDecodeError, ScorerProtocolError) as exc:
                    with self._cond:
                        self._reader_error = exc if isinstance(exc, ScorerProtocolError) \
                            else ScorerProtocolError(f"malformed response line: {exc}")
                        self._cond.notify_all()
                    return
                with self._cond:
                    self._pending[key] = payload
                    self._cond.notify_all()
        except (OSError, ValueError) as exc:
            with self._cond:
                self._reader_error = ScorerTransportError(f"read from scorer failed: {exc}")
                self._cond.notify_all()
        finally:
            with self._cond:
                self._eof = True
                self._cond.notify_all()

    def _score_batch(self, query, sentences):
        request = ScoreRequest(f"q{next(self._next_id)}", query,
                               tuple(s.text for s in sentences))
        request_id = request.request_id
        line = json.dumps(request.payload(), ensure_ascii=False)
        with self._write_lock:
            if self._proc.poll() is not None and not self._pending:
                raise ScorerTransportError("scorer process has exited")
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError) as exc:
                raise ScorerTransportError(f"write to scorer failed: {exc}") from exc
        payload = self._await_response(request_id)
        return _validate_scores(payload.get("scores"), len(sentences), request_id)

    def _await_response(self, request_id: str) -> dict:
        deadline = time.monotonic() + self.timeout
        with self._cond:
            while request_id not in self._pending:
                if self._reader_error is not None:
                    raise self._reader_error
                if self._eof:
                    raise ScorerTransportError("scorer process closed its stdout")
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ScorerTransportError(
                        f"no response for {request_id} within {self.timeout}s")
                self._cond.wait(remaining)
            return self._pending.pop(request_id)

    def close(self):
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        if self._proc.poll() is None:
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._reader.join(timeout=5)


def make_scorer(spec: str, analyzer: Analyzer,
                batch_size: int = DEFAULT_BATCH_SIZE) -> SentenceScorer:
    """Build a scorer from a spec string.

    Syntax: builtin:constant:<v> | builtin:lexical |
    builtin:clairvoyant:<qrels path> | http:<url> | stdio:<command>.
    """
    from .corpus_io import read_qrels

    if spec.startswith("builtin:constant"):
        parts = spec.split(":", 2)
        value = float(parts[2]) if len(parts) == 3 else 0.5
        return ConstantScorer(value)
    if spec == "builtin:lexical":
        return LexicalOverlapScorer(analyzer)
    if spec.startswith("builtin:clairvoyant:"):
        qrels_path = spec.split(":", 2)[2]
        return ClairvoyantScorer(read_qrels(qrels_path))
    if spec.startswith("http:") or spec.startswith("https:"):
        return HttpScorer(spec, batch_size=batch_size)
    if spec.startswith("stdio:"):
        return StdioScorer(spec.split(":", 1)[1], batch_size=batch_size)
    raise DataError(f"unknown scorer spec: {spec!r}")


class ScoreCache:
    """Optional on-disk score cache keyed by
    (scorer fingerprint, query, doc_id, sentence_index).

    Cross-validation folds re-score identical pairs; caching makes grid
    tuning cheap.  Backed by sqlite; safe for use from several threads.
    """

    def __init__(self, directory: str | Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(directory / "scores.sqlite", check_same_thread=False)
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS scores ("
            " fingerprint TEXT, query TEXT, doc_id TEXT, sentence_index INTEGER,"
            " score REAL, PRIMARY KEY (fingerprint, query, doc_id, sentence_index))")
        self._conn.commit()
        self._lock = threading.Lock()

    def get_doc(self, fingerprint: str, query: str, doc_id: str,
                n_sentences: int) -> list[float] | None:
        """All n scores for a document, or None if any are missing."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT sentence_index, score FROM scores"
                " WHERE fingerprint=? AND query=? AND doc_id=?",
                (fingerprint, query, doc_id)).fetchall()
        found = dict(rows)
        if len(found) < n_sentences or any(i not in found for i in range(n_sentences)):
            return None
        return [found[i] for i in range(n_sentences)]

    def put_doc(self, fingerprint: str, query: str, doc_id: str,
                scores: Iterable[float]) -> None:
        rows = [(fingerprint, query, doc_id, i, s) for i, s in enumerate(scores)]
        with self._lock:
            self._conn.executemany(
                "INSERT OR REPLACE INTO scores VALUES (?, ?, ?, ?, ?)", rows)
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()
