from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xlrank.synthdata import build_synthetic_collection, write_synthetic_collection


@pytest.fixture(scope="session")
def synth():
    return build_synthetic_collection(seed=13)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    write_synthetic_collection(out, seed=13)
    return out


class _ScorerHandler(BaseHTTPRequestHandler):
    """Minimal wire-protocol stub; scoring function injected per server."""

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"model": "stub"})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/score":
            self._reply(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        request = json.loads(self.rfile.read(length))
        if self.server.fail_with is not None:
            self._reply(self.server.fail_with, {"error": "induced failure"})
            return
        scores = [self.server.score_fn(request["query"], s) for s in request["sentences"]]
        if self.server.corrupt == "drop-one" and scores:
            scores = scores[:-1]
        elif self.server.corrupt == "out-of-range" and scores:
            scores[0] = 1.5
        self._reply(200, {"request_id": request["request_id"], "scores": scores})

    def _reply(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class StubScorerServer:
    def __init__(self, score_fn=lambda q, s: 0.5):
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _ScorerHandler)
        self._server.score_fn = score_fn
        self._server.fail_with = None
        self._server.corrupt = None
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def set_failure(self, status: int | None):
        self._server.fail_with = status

    def set_corrupt(self, mode: str | None):
        self._server.corrupt = mode

    def stop(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_http_scorer():
    server = StubScorerServer()
    yield server
    server.stop()
