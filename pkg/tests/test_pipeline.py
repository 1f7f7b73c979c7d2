from __future__ import annotations

import random

import pytest

from oracles import ap_bruteforce
from xlrank.corpus_io import Document, Qrels
from xlrank.errors import ScorerTransportError
from xlrank.evidence_fusion import FusionParams, rerank
from xlrank.inverted_index import ScoredDoc, build_index, search
from xlrank.pipeline import (build_topic_table, candidate_sentences,
                             collect_documents, fused_table_scores,
                             make_eval_fn, score_topic, score_topics_parallel,
                             table_average_precision)
from xlrank.scorer_gateway import (ConstantScorer, LexicalOverlapScorer,
                                   ScoreCache, SentenceScorer)
from xlrank.synthdata import build_synthetic_collection
from xlrank.text_analysis import Analyzer

EN = Analyzer(lang="en")


class FlakyScorer(SentenceScorer):
    fingerprint = "test:flaky"

    def _score_batch(self, query, sentences):
        raise ScorerTransportError("boom")


class CountingScorer(SentenceScorer):
    fingerprint = "test:counting"

    def __init__(self):
        self.calls = 0

    def _score_batch(self, query, sentences):
        self.calls += len(sentences)
        return [0.5] * len(sentences)


def doc_sentences():
    docs = {
        "d1": Document("d1", "First point. Second point.", "en"),
        "d2": Document("d2", "Only one sentence here.", "en"),
        "d3": Document("d3", "", "en"),
    }
    cands = [ScoredDoc("d1", 3.0), ScoredDoc("d2", 2.0), ScoredDoc("d3", 1.0)]
    return cands, candidate_sentences(cands, docs)


class TestScoreTopic:
    def test_shapes_and_empty_docs(self):
        _, sentences = doc_sentences()
        scores = score_topic(ConstantScorer(0.5), "t1", "q", sentences)
        assert scores == {"d1": [0.5, 0.5], "d2": [0.5], "d3": []}

    def test_on_error_zero(self):
        _, sentences = doc_sentences()
        scores = score_topic(FlakyScorer(), "t1", "q", sentences, on_error="zero")
        assert scores == {"d1": [0.0, 0.0], "d2": [0.0], "d3": []}

    def test_on_error_fail(self):
        _, sentences = doc_sentences()
        with pytest.raises(ScorerTransportError):
            score_topic(FlakyScorer(), "t1", "q", sentences)

    def test_cache_avoids_rescoring(self, tmp_path):
        _, sentences = doc_sentences()
        cache = ScoreCache(tmp_path)
        scorer = CountingScorer()
        first = score_topic(scorer, "t1", "q", sentences, cache=cache)
        assert scorer.calls == 3
        second = score_topic(scorer, "t1", "q", sentences, cache=cache)
        assert scorer.calls == 3
        assert first == second
        # different query is a different cache key
        score_topic(scorer, "t1", "other", sentences, cache=cache)
        assert scorer.calls == 6
        cache.close()

    def test_thread_count_does_not_change_results(self):
        work = []
        for i in range(6):
            docs = {f"d{i}": Document(f"d{i}", f"alpha bravo w{i}. charlie.", "en")}
            cands = [ScoredDoc(f"d{i}", 1.0)]
            work.append((f"t{i}", f"alpha w{i}", candidate_sentences(cands, docs)))
        scorer = LexicalOverlapScorer(EN)
        seq = score_topics_parallel(scorer, work, threads=1)
        par = score_topics_parallel(scorer, work, threads=4)
        assert seq == par
        assert list(seq) == [f"t{i}" for i in range(6)]


class TestCollectDocuments:
    def test_keeps_only_wanted(self, tmp_path, synth_dir):
        docs = collect_documents(synth_dir / "corpus_en.jsonl", "jsonl",
                                 {"EN0001", "EN0007"})
        assert sorted(docs) == ["EN0001", "EN0007"]

    def test_warns_on_missing(self, synth_dir, caplog):
        with caplog.at_level("WARNING"):
            docs = collect_documents(synth_dir / "corpus_en.jsonl", "jsonl",
                                     {"EN0001", "GHOST"})
        assert sorted(docs) == ["EN0001"]
        assert "GHOST" in caplog.text or "1 candidate" in caplog.text


class TestTopicTable:
    def random_topic(self, rng: random.Random):
        n = rng.randint(1, 30)
        cands = [ScoredDoc(f"d{i:02d}", rng.uniform(0, 8)) for i in range(n)]
        rng.shuffle(cands)
        scores = {c.doc_id: [rng.random() for _ in range(rng.randint(0, 5))]
                  for c in cands}
        qrels = Qrels()
        for c in cands:
            if rng.random() < 0.4:
                qrels.judgments[("t1", c.doc_id)] = 1
        # guarantee at least one relevant judgment, possibly unretrieved
        qrels.judgments[("t1", f"d{rng.randint(0, n - 1):02d}")] = 1
        if rng.random() < 0.3:
            qrels.judgments[("t1", "unretrieved")] = 1
        return cands, scores, qrels

    def test_table_ap_matches_rerank_plus_bruteforce(self):
        rng = random.Random(5)
        for _ in range(30):
            cands, scores, qrels = self.random_topic(rng)
            params = FusionParams(rng.choice([0.0, 0.3, 0.7, 1.0]), (1.0,), 1)
            table = build_topic_table("t1", cands, scores, qrels)
            got = table_average_precision(table, params)
            ranked = [d.doc_id for d in rerank(cands, scores, params)]
            relevant = {d for (t, d), g in qrels.judgments.items() if g >= 1}
            expected = ap_bruteforce(ranked, relevant)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_fused_scores_bit_identical_to_scalar_fuse(self):
        rng = random.Random(6)
        from xlrank.evidence_fusion import fuse

        for _ in range(20):
            cands, scores, qrels = self.random_topic(rng)
            params = FusionParams(rng.random(), (1.0, rng.random(), rng.random()), 3)
            table = build_topic_table("t1", cands, scores, qrels)
            fused = fused_table_scores(table, params)
            by_id = {c.doc_id: c.score for c in cands}
            for doc_id, value in zip(table.doc_ids, fused):
                assert value == fuse(params, by_id[doc_id], scores[doc_id])

    def test_eval_fn_adapter(self):
        cands = [ScoredDoc("a", 2.0), ScoredDoc("b", 1.0)]
        scores = {"a": [0.1], "b": [0.9]}
        qrels = Qrels({("t1", "b"): 1})
        tables = {"t1": build_topic_table("t1", cands, scores, qrels)}
        eval_fn = make_eval_fn(tables)
        assert eval_fn(FusionParams(1.0, (1.0,), 1), ["t1"]) == {"t1": 0.5}
        assert eval_fn(FusionParams(0.0, (1.0,), 1), ["t1"]) == {"t1": 1.0}


class TestSyntheticCollection:
    def test_shape(self, synth):
        assert len(synth.topics) == 10
        assert len(synth.documents_en) == 160
        assert len(synth.documents_zh) == 40
        assert all(set(t.titles) == {"en", "zh"} for t in synth.topics)

    def test_deterministic(self):
        a = build_synthetic_collection(seed=13)
        b = build_synthetic_collection(seed=13)
        assert a.documents_en == b.documents_en
        assert a.qrels_en.judgments == b.qrels_en.judgments

    def test_every_topic_fully_retrievable_and_imperfect_for_bm25(self, synth):
        """Each relevant doc shares a term with its query, and BM25 AP < 1."""
        index = build_index(synth.documents_en, EN)
        for topic in synth.topics:
            hits = search(index, topic.titles["en"], EN, 1000)
            got = {h.doc_id for h in hits}
            relevant = {d for (t, d), g in synth.qrels_en.judgments.items()
                        if t == topic.topic_id and g >= 1}
            assert relevant, topic.topic_id
            assert relevant <= got, f"{topic.topic_id} lost relevant docs"
            ap = ap_bruteforce([h.doc_id for h in hits], relevant)
            assert ap < 1.0, f"{topic.topic_id} already perfect for BM25"

    def test_zh_side_retrievable(self, synth):
        zh = Analyzer(lang="zh")
        index = build_index(synth.documents_zh, zh)
        for topic in synth.topics:
            hits = search(index, topic.titles["zh"], zh, 1000)
            relevant = {d for (t, d), g in synth.qrels_zh.judgments.items()
                        if t == topic.topic_id and g >= 1}
            assert relevant <= {h.doc_id for h in hits}
