"""Deterministic synthetic multilingual test collection.

The real newswire collections behind this kind of experiment are
licensed, so CI and the acceptance suite run against a small generated
stand-in: an English corpus of 160 documents and a Chinese corpus of 40,
sharing 10 topics with parallel en/zh titles and graded judgments.

Construction guarantees, per topic:
  - every relevant document shares a term with the query, so first-stage
    retrieval always finds all relevant documents;
  - short keyword-stuffed distractors (judged non-relevant) outscore the
    weaker relevant documents under BM25, so BM25 AP < 1 and a good
    sentence scorer has room to help.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus_io import Document, Qrels, Topic, write_corpus, write_qrels

EN_SIGNALS = [
    ("amber", "falcon"), ("basalt", "heron"), ("cobalt", "otter"),
    ("damson", "lynx"), ("ember", "plover"), ("fjord", "marten"),
    ("garnet", "ibis"), ("hazel", "stoat"), ("indigo", "curlew"),
    ("jasper", "vole"),
]

ZH_SIGNALS = [
    "琥珀隼", "玄武鹭", "钴蓝獭", "紫李猞", "余烬鸻",
    "峡湾貂", "石榴鹮", "榛果鼬", "靛青鹬", "碧玉鼠",
]

_FILLER = (
    "the river stone cloud market evening journal report city garden winter "
    "harvest train mountain library bridge festival morning valley street coast "
    "farmer teacher doctor music paper letter window door summer autumn spring "
    "night light water field forest road house"
).split()

_ZH_FILLER = "天地人山水日月风雨雪城书车马花鸟鱼虫"


@dataclass
class SyntheticCollection:
    documents_en: list[Document]
    documents_zh: list[Document]
    topics: list[Topic]
    qrels_en: Qrels
    qrels_zh: Qrels


def _en_sentence(rng: random.Random, lead: list[str], n_filler: int) -> str:
    words = lead + [rng.choice(_FILLER) for _ in range(n_filler)]
    return " ".join(words) + "."


def _zh_sentence(rng: random.Random, lead: str, n_filler: int) -> str:
    return lead + "".join(rng.choice(_ZH_FILLER) for _ in range(n_filler)) + "。"


def build_synthetic_collection(seed: int = 13) -> SyntheticCollection:
    rng = random.Random(seed)
    topics: list[Topic] = []
    docs_en: list[Document] = []
    docs_zh: list[Document] = []
    qrels_en = Qrels()
    qrels_zh = Qrels()

    en_counter = iter(range(1, 10_000))
    zh_counter = iter(range(1, 10_000))

    def next_en() -> str:
        return f"EN{next(en_counter):04d}"

    def next_zh() -> str:
        return f"ZH{next(zh_counter):04d}"

    for i, ((term_a, term_b), zh_term) in enumerate(zip(EN_SIGNALS, ZH_SIGNALS)):
        topic_id = f"T{i + 1:02d}"
        topics.append(Topic(topic_id, {"en": f"{term_a} {term_b}", "zh": zh_term}))

        # Strong relevant: both signal terms twice, moderate length.
        for _ in range(2):
            doc_id = next_en()
            text = " ".join([
                _en_sentence(rng, [term_a, term_b], 4),
                _en_sentence(rng, [term_b, term_a], 5),
                _en_sentence(rng, [], 6),
            ])
            docs_en.append(Document(doc_id, text, "en"))
            qrels_en.judgments[(topic_id, doc_id)] = 1

        # Weak relevant: one signal mention buried in filler.
        for j in range(4):
            doc_id = next_en()
            term = term_a if j % 2 == 0 else term_b
            text = " ".join([
                _en_sentence(rng, [term], 7),
                _en_sentence(rng, [], 9),
                _en_sentence(rng, [], 9),
            ])
            docs_en.append(Document(doc_id, text, "en"))
            qrels_en.judgments[(topic_id, doc_id)] = 1

        # Distractors: keyword-stuffed and short; judged non-relevant.
        for j in range(4):
            doc_id = next_en()
            term = term_a if j % 2 == 0 else term_b
            text = _en_sentence(rng, [term] * 5, 2)
            docs_en.append(Document(doc_id, text, "en"))
            qrels_en.judgments[(topic_id, doc_id)] = 0

        # Chinese side: two relevant, one distractor.
        for _ in range(2):
            doc_id = next_zh()
            text = _zh_sentence(rng, zh_term, 5) + _zh_sentence(rng, "", 6)
            docs_zh.append(Document(doc_id, text, "zh"))
            qrels_zh.judgments[(topic_id, doc_id)] = 1
        doc_id = next_zh()
        docs_zh.append(Document(doc_id, _zh_sentence(rng, zh_term * 3, 1), "zh"))
        qrels_zh.judgments[(topic_id, doc_id)] = 0

    for _ in range(60):
        docs_en.append(Document(next_en(), " ".join([
            _en_sentence(rng, [], 8), _en_sentence(rng, [], 7),
        ]), "en"))
    for _ in range(10):
        docs_zh.append(Document(next_zh(), _zh_sentence(rng, "", 8), "zh"))

    return SyntheticCollection(docs_en, docs_zh, topics, qrels_en, qrels_zh)


def write_synthetic_collection(out_dir: str | Path, seed: int = 13) -> dict[str, Path]:
    """Materialize the collection; returns the paths that were written."""
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    coll = build_synthetic_collection(seed)
    paths = {
        "corpus_en": out / "corpus_en.jsonl",
        "corpus_zh": out / "corpus_zh.jsonl",
        "topics": out / "topics.jsonl",
        "qrels_en": out / "qrels_en.txt",
        "qrels_zh": out / "qrels_zh.txt",
    }
    write_corpus(paths["corpus_en"], coll.documents_en)
    write_corpus(paths["corpus_zh"], coll.documents_zh)
    with open(paths["topics"], "w", encoding="utf-8") as fh:
        for t in coll.topics:
            fh.write(json.dumps({"id": t.topic_id, "titles": t.titles},
                                ensure_ascii=False) + "\n")
    write_qrels(paths["qrels_en"], coll.qrels_en)
    write_qrels(paths["qrels_zh"], coll.qrels_zh)
    return paths
