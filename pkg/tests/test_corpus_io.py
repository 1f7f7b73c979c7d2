from __future__ import annotations

import json

import pytest

from xlrank.corpus_io import (Document, Qrels, RunEntry, load_corpus,
                              load_topics, read_qrels, read_run, read_topics,
                              run_by_topic, write_corpus, write_qrels,
                              write_run)
from xlrank.errors import DataError


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadCorpus:
    def test_jsonl_field_mapping(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, ['{"id":"d1","contents":"a b a","lang":"en"}'])
        docs = list(load_corpus(path))
        assert docs == [Document("d1", "a b a", "en")]

    def test_empty_file_is_empty_stream(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert list(load_corpus(path)) == []

    def test_malformed_record_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, ['{"id":"d1","contents":"x"}', "{nope"])
        with pytest.raises(DataError, match=r":2:"):
            list(load_corpus(path))

    def test_duplicate_doc_id_named(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, ['{"id":"d1","contents":"x"}', '{"id":"d1","contents":"y"}'])
        with pytest.raises(DataError, match="d1"):
            list(load_corpus(path))

    def test_streaming_is_lazy(self, tmp_path):
        # First document must come out before the malformed tail is read.
        path = tmp_path / "c.jsonl"
        write_lines(path, ['{"id":"d1","contents":"x"}', "{broken"])
        stream = load_corpus(path)
        assert next(stream).doc_id == "d1"
        with pytest.raises(DataError):
            next(stream)

    def test_missing_lang_uses_default(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, ['{"id":"d1","contents":"x"}'])
        (doc,) = load_corpus(path, default_lang="fr")
        assert doc.lang == "fr"

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError, match="format"):
            list(load_corpus(path, format="parquet"))

    def test_roundtrip(self, tmp_path):
        docs = [Document("d1", "hello there", "en"),
                Document("d2", "", "en"),
                Document("d3", "你好。", "zh")]
        path = tmp_path / "c.jsonl"
        write_corpus(path, docs)
        assert list(load_corpus(path)) == docs

    def test_trec_sgml(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text(
            "<DOC>\n<DOCNO> FBIS3-1 </DOCNO>\n<TEXT>\nfirst body\n</TEXT>\n</DOC>\n"
            "<DOC>\n<DOCNO>FBIS3-2</DOCNO>\n<HEADLINE>head</HEADLINE>\n"
            "<TEXT>second</TEXT>\n</DOC>\n",
            encoding="utf-8")
        docs = list(load_corpus(path, format="trec-sgml", default_lang="ar"))
        assert [d.doc_id for d in docs] == ["FBIS3-1", "FBIS3-2"]
        assert docs[0].contents == "first body"
        assert "head" in docs[1].contents and "second" in docs[1].contents
        assert docs[0].lang == "ar"

    def test_trec_sgml_duplicate(self, tmp_path):
        path = tmp_path / "c.sgml"
        block = "<DOC>\n<DOCNO>X</DOCNO>\n<TEXT>t</TEXT>\n</DOC>\n"
        path.write_text(block * 2, encoding="utf-8")
        with pytest.raises(DataError, match="X"):
            list(load_corpus(path, format="trec-sgml"))


class TestTopics:
    def test_variant_selection(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_lines(path, [json.dumps(
            {"id": "t1", "titles": {"en": "who is X", "zh": "谁是X"}},
            ensure_ascii=False)])
        assert load_topics(path, "zh") == [("t1", "谁是X")]

    def test_missing_variant_names_topic_and_lang(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_lines(path, ['{"id":"t1","titles":{"en":"who is X","zh":"x"}}'])
        with pytest.raises(DataError, match="missing variant fr for t1"):
            load_topics(path, "fr")

    def test_file_order_preserved(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_lines(path, ['{"id":"t2","titles":{"en":"b"}}',
                           '{"id":"t1","titles":{"en":"a"}}'])
        assert [t for t, _ in load_topics(path, "en")] == ["t2", "t1"]

    def test_alternate_field(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_lines(path, ['{"id":"t1","titles":{"en":"a"},"descriptions":{"en":"longer"}}'])
        assert load_topics(path, "en", field_name="descriptions") == [("t1", "longer")]
        assert read_topics(path)[0].titles == {"en": "a"}


class TestQrels:
    def test_line_mapping(self, tmp_path):
        path = tmp_path / "q.txt"
        write_lines(path, ["t1 0 d1 1", "t1 0 d2 0", "t2 0 d1 2"])
        qrels = read_qrels(path)
        assert qrels.grade("t1", "d1") == 1
        assert qrels.grade("t1", "d2") == 0
        assert qrels.grade("t1", "unjudged") == 0
        assert qrels.relevant_count("t2") == 1

    def test_negative_grade_rejected(self, tmp_path):
        path = tmp_path / "q.txt"
        write_lines(path, ["t1 0 d1 -1"])
        with pytest.raises(DataError):
            read_qrels(path)

    def test_roundtrip(self, tmp_path):
        qrels = Qrels({("t1", "d1"): 1, ("t1", "d2"): 0, ("t2", "d9"): 3})
        path = tmp_path / "q.txt"
        write_qrels(path, qrels)
        assert read_qrels(path).judgments == qrels.judgments


class TestRuns:
    def entries(self):
        return [
            RunEntry("t1", "d1", 1, 2.5, "tag"),
            RunEntry("t1", "d2", 2, 1.25, "tag"),
            RunEntry("t1", "d3", 3, 0.0078125, "tag"),
        ]

    def test_line_mapping(self, tmp_path):
        path = tmp_path / "r.run"
        write_lines(path, ["t1 Q0 d1 1 2.5 tag"])
        assert read_run(path) == [RunEntry("t1", "d1", 1, 2.5, "tag")]

    def test_roundtrip_identity(self, tmp_path):
        path = tmp_path / "r.run"
        write_run(path, self.entries())
        assert read_run(path) == self.entries()

    def test_roundtrip_full_float_precision(self, tmp_path):
        entries = [RunEntry("t1", "d1", 1, 1 / 3, "x"),
                   RunEntry("t1", "d2", 2, 0.1 + 0.2, "x")]
        path = tmp_path / "r.run"
        write_run(path, entries)
        assert read_run(path) == entries

    def test_rank_gap_rejected(self, tmp_path):
        path = tmp_path / "r.run"
        write_lines(path, ["t1 Q0 d1 1 2.0 tag", "t1 Q0 d2 3 1.0 tag"])
        with pytest.raises(DataError, match="rank gap"):
            read_run(path)

    def test_score_order_violation_rejected(self, tmp_path):
        path = tmp_path / "r.run"
        write_lines(path, ["t1 Q0 d1 1 1.0 tag", "t1 Q0 d2 2 2.0 tag"])
        with pytest.raises(DataError, match="score increases"):
            read_run(path)

    def test_duplicate_doc_rejected(self, tmp_path):
        path = tmp_path / "r.run"
        write_lines(path, ["t1 Q0 d1 1 2.0 tag", "t1 Q0 d1 2 1.0 tag"])
        with pytest.raises(DataError, match="duplicate"):
            read_run(path)

    def test_malformed_line_numbered(self, tmp_path):
        path = tmp_path / "r.run"
        write_lines(path, ["t1 Q0 d1 1 2.0 tag", "garbage line"])
        with pytest.raises(DataError, match=r":2:"):
            read_run(path)

    def test_group_by_topic(self):
        entries = [RunEntry("t2", "d1", 1, 1.0, "x")] + self.entries()
        grouped = run_by_topic(entries)
        assert sorted(grouped) == ["t1", "t2"]
        assert [e.rank for e in grouped["t1"]] == [1, 2, 3]
