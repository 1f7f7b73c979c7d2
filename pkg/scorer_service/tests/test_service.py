from __future__ import annotations

import io
import json
import threading

import pytest
import requests

from scorer_service.service import ScoringSession, serve_http, serve_stdio


@pytest.fixture(scope="module")
def session(toy_checkpoint):
    return ScoringSession.load(toy_checkpoint)


@pytest.fixture()
def http_url(session):
    server = serve_http(session, port=0, announce=lambda *a, **k: None)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()


class TestScoringSession:
    def test_alignment_and_range(self, session):
        sentences = ["red fox near the river", "meadow", "", "x " * 200]
        scores = session.score("red fox", sentences)
        assert len(scores) == len(sentences)
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_deterministic(self, session):
        sentences = ["red fox near the river", "meadow by the shore"]
        assert session.score("red fox", sentences) == session.score("red fox", sentences)

    def test_batch_split_invariant_bitwise(self, session):
        sentences = [f"river {i}" for i in range(5)]
        whole = session.score("red fox", sentences)
        parts = []
        for s in sentences:
            parts.extend(session.score("red fox", [s]))
        assert parts == whole

    def test_handle_request_validation(self, session):
        with pytest.raises(ValueError, match="request_id"):
            session.handle_request({"query": "q", "sentences": []})
        with pytest.raises(ValueError, match="query"):
            session.handle_request({"request_id": "r", "sentences": []})
        with pytest.raises(ValueError, match="sentences"):
            session.handle_request({"request_id": "r", "query": "q", "sentences": [1]})
        reply = session.handle_request(
            {"request_id": "r9", "query": "q", "sentences": ["a", "b"]})
        assert reply["request_id"] == "r9"
        assert len(reply["scores"]) == 2


class TestHttpTransport:
    def test_health(self, http_url):
        payload = requests.get(f"{http_url}/health", timeout=10).json()
        assert payload == {"model": "toy-pair-scorer"}

    def test_score_roundtrip(self, http_url):
        body = {"request_id": "r1", "query": "red fox", "sentences": ["a", "b", "c"]}
        resp = requests.post(f"{http_url}/score", json=body, timeout=10)
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["request_id"] == "r1"
        assert len(payload["scores"]) == 3

    def test_malformed_json_is_400_without_request_id(self, http_url):
        resp = requests.post(f"{http_url}/score", data=b"{nope", timeout=10)
        assert resp.status_code == 400
        assert "request_id" not in resp.json()

    def test_invalid_request_keeps_request_id(self, http_url):
        resp = requests.post(f"{http_url}/score",
                             json={"request_id": "r7", "query": 3, "sentences": []},
                             timeout=10)
        assert resp.status_code == 400
        assert resp.json()["request_id"] == "r7"

    def test_unknown_endpoint_404(self, http_url):
        assert requests.get(f"{http_url}/nope", timeout=10).status_code == 404
        assert requests.post(f"{http_url}/nope", json={}, timeout=10).status_code == 404


class TestStdioTransport:
    def run_lines(self, session, lines: list[str]) -> list[dict]:
        out = io.StringIO()
        serve_stdio(session, stdin=io.StringIO("\n".join(lines) + "\n"), stdout=out)
        return [json.loads(line) for line in out.getvalue().strip().splitlines()]

    def test_roundtrip(self, session):
        replies = self.run_lines(session, [
            json.dumps({"request_id": "a", "query": "red fox", "sentences": ["x"]}),
            json.dumps({"request_id": "b", "query": "red fox", "sentences": ["y", "z"]}),
        ])
        assert [r["request_id"] for r in replies] == ["a", "b"]
        assert len(replies[1]["scores"]) == 2

    def test_malformed_line_gets_error_object(self, session):
        replies = self.run_lines(session, ["{broken"])
        assert "error" in replies[0] and "request_id" not in replies[0]

    def test_invalid_request_keeps_request_id(self, session):
        replies = self.run_lines(session, [
            json.dumps({"request_id": "r5", "query": "q", "sentences": "not-a-list"})])
        assert replies[0]["request_id"] == "r5"
        assert "error" in replies[0]
