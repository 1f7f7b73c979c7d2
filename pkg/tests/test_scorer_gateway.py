from __future__ import annotations

import sys
import threading
from pathlib import Path

import pytest

from xlrank.conformance import check_http_service, run_conformance_checks
from xlrank.corpus_io import Qrels
from xlrank.errors import DataError, ScorerProtocolError, ScorerTransportError
from xlrank.scorer_gateway import (ClairvoyantScorer, ConstantScorer,
                                   HttpScorer, LexicalOverlapScorer,
                                   ScoreCache, ScoredSentence, ScoreRequest,
                                   StdioScorer, attach_scores,
                                   clairvoyant_scorer, make_scorer, score_batch)
from xlrank.text_analysis import Analyzer, Sentence

EN = Analyzer(lang="en")
STDIO_STUB = f"{sys.executable} {Path(__file__).parent / 'stdio_stub.py'}"


class TestBuiltins:
    def test_constant(self):
        assert score_batch(ConstantScorer(0.5), "q", ["a", "b", "c"]) == [0.5] * 3

    def test_constant_range_enforced(self):
        with pytest.raises(DataError):
            ConstantScorer(1.5)

    def test_lexical_overlap(self):
        scorer = LexicalOverlapScorer(EN)
        assert score_batch(scorer, "a b", ["a b c", "x y"]) == [1.0, 0.0]
        assert score_batch(scorer, "a b", ["b b a"]) == [1.0]
        assert score_batch(scorer, "a b c d", ["a c"]) == [0.5]
        assert score_batch(scorer, "", ["anything"]) == [0.0]

    def test_clairvoyant(self):
        qrels = Qrels({("t1", "d1"): 1, ("t1", "d2"): 0, ("t2", "d3"): 2})
        scorer = clairvoyant_scorer(qrels, "t1")
        sentences = [Sentence("d1", 0, "x"), Sentence("d2", 0, "y"), Sentence("d9", 0, "z")]
        assert scorer.score_sentences("q", sentences) == [1.0, 0.0, 0.0]
        # grades >= 1 binarize to 1.0
        assert clairvoyant_scorer(qrels, "t2").score_sentences(
            "q", [Sentence("d3", 0, "w")]) == [1.0]

    def test_clairvoyant_topic_without_relevant(self):
        scorer = clairvoyant_scorer(Qrels(), "t1")
        assert scorer.score_sentences("q", [Sentence("d1", 0, "x")]) == [0.0]

    def test_clairvoyant_requires_topic_binding(self):
        scorer = ClairvoyantScorer(Qrels())
        with pytest.raises(DataError, match="bound"):
            scorer.score_sentences("q", [Sentence("d1", 0, "x")])
        bound = scorer.for_topic("t1")
        assert bound.topic_id == "t1"

    def test_conformance_suite_on_builtins(self):
        for scorer in (ConstantScorer(0.25), LexicalOverlapScorer(EN)):
            results = run_conformance_checks(scorer)
            assert all(r.passed for r in results), results


class TestAlignmentProperties:
    def test_permutation_alignment(self):
        scorer = LexicalOverlapScorer(EN)
        sentences = ["a b", "c", "b", "d e f"]
        forward = score_batch(scorer, "a b c", sentences)
        backward = score_batch(scorer, "a b c", sentences[::-1])
        assert forward == backward[::-1]

    def test_batch_partition_equivalence(self):
        scorer = LexicalOverlapScorer(EN)
        scorer.batch_size = 2
        sentences = [f"a{i} b" for i in range(7)]
        small = score_batch(scorer, "b", sentences)
        scorer.batch_size = 64
        big = score_batch(scorer, "b", sentences)
        assert small == big


class TestHttpScorer:
    def test_scores_and_health(self, stub_http_scorer):
        scorer = HttpScorer(stub_http_scorer.url)
        assert score_batch(scorer, "q", ["a", "b"]) == [0.5, 0.5]
        assert scorer.health()["model"] == "stub"
        scorer.close()

    def test_conformance_helper(self, stub_http_scorer):
        results = check_http_service(stub_http_scorer.url)
        assert [r.name for r in results][0] == "health"
        assert all(r.passed for r in results), results

    def test_non_200_is_transport_error(self, stub_http_scorer):
        stub_http_scorer.set_failure(500)
        scorer = HttpScorer(stub_http_scorer.url)
        with pytest.raises(ScorerTransportError, match="500"):
            score_batch(scorer, "q", ["a"])

    def test_wrong_count_is_protocol_error(self, stub_http_scorer):
        stub_http_scorer.set_corrupt("drop-one")
        scorer = HttpScorer(stub_http_scorer.url)
        with pytest.raises(ScorerProtocolError, match="request_id"):
            score_batch(scorer, "q", ["a", "b"])

    def test_out_of_range_rejected_not_clamped(self, stub_http_scorer):
        stub_http_scorer.set_corrupt("out-of-range")
        scorer = HttpScorer(stub_http_scorer.url)
        with pytest.raises(ScorerProtocolError, match=r"outside \[0, 1\]"):
            score_batch(scorer, "q", ["a", "b"])

    def test_unreachable_after_retries(self):
        scorer = HttpScorer("http://127.0.0.1:9", timeout=0.2, retries=1)
        with pytest.raises(ScorerTransportError, match="attempts"):
            score_batch(scorer, "q", ["a"])


class TestStdioScorer:
    def test_scores(self):
        scorer = StdioScorer(f"{STDIO_STUB} --score 0.75")
        try:
            assert score_batch(scorer, "q", ["a", "b", "c"]) == [0.75] * 3
        finally:
            scorer.close()

    def test_out_of_order_responses_matched(self):
        scorer = StdioScorer(f"{STDIO_STUB} --buffer 2", batch_size=1)
        results: dict[int, list[float]] = {}
        errors: list[Exception] = []

        def work(i):
            try:
                results[i] = score_batch(scorer, "q", [f"s{i}"])
            except Exception as exc:  # noqa: BLE001 - recorded for assertion
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(i,)) for i in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=10)
        scorer.close()
        assert not errors
        assert results == {0: [0.5], 1: [0.5]}

    def test_corrupt_reply_is_protocol_error(self):
        scorer = StdioScorer(f"{STDIO_STUB} --corrupt out-of-range")
        try:
            with pytest.raises(ScorerProtocolError):
                score_batch(scorer, "q", ["a", "b"])
        finally:
            scorer.close()

    def test_dead_process_is_transport_error(self):
        scorer = StdioScorer(f"{sys.executable} -c pass")
        scorer._proc.wait(timeout=5)
        with pytest.raises(ScorerTransportError):
            score_batch(scorer, "q", ["a"])
        scorer.close()


class TestMakeScorer:
    def test_specs(self, tmp_path):
        assert isinstance(make_scorer("builtin:constant:0.25", EN), ConstantScorer)
        assert make_scorer("builtin:constant:0.25", EN).value == 0.25
        assert isinstance(make_scorer("builtin:lexical", EN), LexicalOverlapScorer)
        qrels_path = tmp_path / "q.txt"
        qrels_path.write_text("t1 0 d1 1\n", encoding="utf-8")
        scorer = make_scorer(f"builtin:clairvoyant:{qrels_path}", EN)
        assert isinstance(scorer, ClairvoyantScorer)
        assert isinstance(make_scorer("http://example.invalid", EN), HttpScorer)

    def test_unknown_spec(self):
        with pytest.raises(DataError, match="scorer spec"):
            make_scorer("magic:8ball", EN)


class TestScoreCache:
    def test_roundtrip_and_miss(self, tmp_path):
        cache = ScoreCache(tmp_path)
        assert cache.get_doc("fp", "q", "d1", 2) is None
        cache.put_doc("fp", "q", "d1", [0.1, 0.9])
        assert cache.get_doc("fp", "q", "d1", 2) == [0.1, 0.9]
        # a different fingerprint or sentence count misses
        assert cache.get_doc("other", "q", "d1", 2) is None
        assert cache.get_doc("fp", "q", "d1", 3) is None
        cache.close()

    def test_persistence_across_instances(self, tmp_path):
        cache = ScoreCache(tmp_path)
        cache.put_doc("fp", "q", "d1", [0.4])
        cache.close()
        cache2 = ScoreCache(tmp_path)
        assert cache2.get_doc("fp", "q", "d1", 1) == [0.4]
        cache2.close()


class TestWireTypes:
    def test_score_request_payload(self):
        req = ScoreRequest("r1", "q", ("a", "b"))
        assert req.payload() == {"request_id": "r1", "query": "q", "sentences": ["a", "b"]}

    def test_score_request_needs_sentences(self):
        with pytest.raises(DataError):
            ScoreRequest("r1", "q", ())

    def test_attach_scores(self):
        sentences = [Sentence("d1", 0, "a"), Sentence("d1", 1, "b")]
        got = attach_scores(sentences, [0.25, 1.0])
        assert got == [ScoredSentence("d1", 0, 0.25), ScoredSentence("d1", 1, 1.0)]
        with pytest.raises(DataError):
            attach_scores(sentences, [0.25])
        with pytest.raises(DataError):
            ScoredSentence("d1", 0, 1.5)
