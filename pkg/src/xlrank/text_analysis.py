"""Language-aware tokenization and sentence segmentation.

Tokenization has two modes: ``unicode-word`` (word characters, optional
lowercasing and stopword removal) and ``cjk-bigram`` (overlapping
character bigrams over ideograph runs, Latin-script words kept whole).
Chinese always uses the bigram mode.  Sentence segmentation is
rule-based and deterministic; see split_sentences.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

TOKEN_MODES = ("unicode-word", "cjk-bigram")

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# CJK ideographs plus kana and hangul; these emit overlapping bigrams.
_CJK_RANGES = (
    (0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF),
    (0x3040, 0x309F), (0x30A0, 0x30FF), (0xAC00, 0xD7AF),
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


@dataclass(frozen=True)
class Analyzer:
    """Immutable tokenizer configuration; safe to share across threads."""

    lang: str = "en"
    lowercase: bool = True
    stopwords: frozenset[str] | None = None
    mode: str = "unicode-word"

    def __post_init__(self):
        if self.mode not in TOKEN_MODES:
            raise DataError(f"unknown token mode: {self.mode!r}")
        if self.lang == "zh" and self.mode != "cjk-bigram":
            object.__setattr__(self, "mode", "cjk-bigram")

    def fingerprint(self) -> str:
        stop = "none"
        if self.stopwords:
            digest = hashlib.sha256("\n".join(sorted(self.stopwords)).encode()).hexdigest()
            stop = digest[:12]
        return f"lang={self.lang};lower={int(self.lowercase)};mode={self.mode};stop={stop}"


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    text: str


def tokenize(analyzer: Analyzer, text: str) -> list[str]:
    """Split text into index terms; pure and deterministic."""
    if analyzer.lowercase:
        text = text.lower()
    if analyzer.mode == "cjk-bigram":
        terms = _cjk_bigram_terms(text)
    else:
        terms = _WORD_RE.findall(text)
    if analyzer.stopwords:
        terms = [t for t in terms if t not in analyzer.stopwords]
    return terms


def _cjk_bigram_terms(text: str) -> list[str]:
    """Overlapping bigrams over each CJK run (lone char stays a unigram);
    non-CJK word runs are emitted as whole tokens."""
    terms: list[str] = []
    run: list[str] = []
    other: list[str] = []

    def flush_run():
        if len(run) == 1:
            terms.append(run[0])
        else:
            terms.extend(run[i] + run[i + 1] for i in range(len(run) - 1))
        run.clear()

    def flush_other():
        terms.extend(_WORD_RE.findall("".join(other)))
        other.clear()

    for ch in text:
        if _is_cjk(ch):
            if other:
                flush_other()
            run.append(ch)
        else:
            if run:
                flush_run()
            other.append(ch)
    if run:
        flush_run()
    if other:
        flush_other()
    return terms


# Fullwidth/abugida terminators end a sentence wherever they appear (CJK
# and Indic scripts place no space after them); ASCII terminators only
# before whitespace or end of text, so decimals and abbreviations survive.
_IMMEDIATE_TERMINATORS = frozenset("。！？؟।…")
_WHITESPACE_TERMINATORS = frozenset(".!?")
_ALL_TERMINATORS = _IMMEDIATE_TERMINATORS | _WHITESPACE_TERMINATORS

SENTENCE_CHAR_BUDGET = 2000


def split_sentences(lang: str, text: str, doc_id: str = "",
                    max_chars: int = SENTENCE_CHAR_BUDGET) -> list[Sentence]:
    """Segment text into sentences with consecutive indices from 0.

    A sentence closes at a terminator (see module constants), at a blank
    line, or when it reaches max_chars (hard split).  Whitespace-only
    fragments are dropped; every non-whitespace character of the input
    lands in exactly one sentence.
    """
    sentences: list[Sentence] = []
    buf: list[str] = []

    def close():
        stripped = "".join(buf).strip()
        buf.clear()
        if stripped:
            sentences.append(Sentence(doc_id, len(sentences), stripped))

    n = len(text)
    for i, ch in enumerate(text):
        buf.append(ch)
        nxt = text[i + 1] if i + 1 < n else ""
        if ch == "\n" and nxt == "\n":
            close()
            continue
        if len(buf) >= max_chars:
            close()
            continue
        if ch in _ALL_TERMINATORS and nxt not in _ALL_TERMINATORS:
            if ch in _IMMEDIATE_TERMINATORS or nxt == "" or nxt.isspace():
                close()
    close()
    return sentences


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Stopword list file: one term per line, '#' starts a comment."""
    terms: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.split("#", 1)[0].strip()
            if term:
                terms.add(term)
    return frozenset(terms)
