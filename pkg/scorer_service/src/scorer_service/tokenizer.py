"""Word-level tokenizer with single-character CJK handling.

Deliberately small: lowercased word tokens, CJK ideographs/kana/hangul
as individual tokens, vocabulary built from the training corpus with
reserved [PAD]/[UNK]/[CLS]/[SEP] ids.  The vocabulary ships inside the
checkpoint so serving reproduces training tokenization exactly.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)

_CJK_RANGES = (
    (0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF),
    (0x3040, 0x309F), (0x30A0, 0x30FF), (0xAC00, 0xD7AF),
)
_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def text_tokens(text: str) -> list[str]:
    tokens: list[str] = []
    word: list[str] = []

    def flush():
        if word:
            tokens.extend(_WORD_RE.findall("".join(word)))
            word.clear()

    for ch in text.lower():
        if _is_cjk(ch):
            flush()
            tokens.append(ch)
        else:
            word.append(ch)
    flush()
    return tokens


class Tokenizer:
    def __init__(self, vocab: dict[str, int]):
        for i, special in enumerate(SPECIALS):
            if vocab.get(special) != i:
                raise ValueError(f"vocab must map {special} to {i}")
        self.vocab = vocab
        self.pad_id, self.unk_id, self.cls_id, self.sep_id = range(4)

    def __len__(self) -> int:
        return len(self.vocab)

    def ids(self, text: str) -> list[int]:
        return [self.vocab.get(tok, self.unk_id) for tok in text_tokens(text)]

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int = 20000) -> "Tokenizer":
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(text_tokens(text))
        vocab = {special: i for i, special in enumerate(SPECIALS)}
        # most common first; ties alphabetical for determinism
        for token, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if len(vocab) >= max_size:
                break
            vocab[token] = len(vocab)
        return cls(vocab)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.vocab, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Tokenizer":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))
