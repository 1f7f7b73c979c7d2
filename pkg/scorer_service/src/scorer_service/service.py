"""Serve a checkpoint over the scorer wire protocol.

HTTP: POST /score with {"request_id", "query", "sentences"} answered by
{"request_id", "scores"}; GET /health answered by {"model": name}.
Stdio: the same objects, newline-delimited on stdin/stdout.  Scores are
the softmax probability of the relevant class, one per sentence,
order-aligned.  Inference runs under no_grad in eval mode, so identical
requests yield identical scores.
"""

from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import torch

from .model import PairClassifier, build_input, load_checkpoint, pad_batch
from .tokenizer import Tokenizer

class ScoringSession:
    """A loaded checkpoint plus thread-safe inference.

    Each (query, sentence) pair is scored in its own fixed-shape forward
    pass rather than a padded batch: padded-batch kernels are not
    bit-exact across batch shapes, and the protocol requires the scores
    of a sentence list to equal those of any partition of it.  At this
    service's scale, reproducibility is worth more than batch throughput.
    """

    def __init__(self, model: PairClassifier, tokenizer: Tokenizer,
                 max_sequence_length: int):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.max_sequence_length = max_sequence_length
        self._lock = threading.Lock()

    @classmethod
    def load(cls, checkpoint_dir: str | Path) -> "ScoringSession":
        return cls(*load_checkpoint(checkpoint_dir))

    @property
    def model_name(self) -> str:
        return self.model.config.name

    def score(self, query: str, sentences: list[str]) -> list[float]:
        scores: list[float] = []
        with self._lock, torch.no_grad():
            for sentence in sentences:
                encoded = build_input(self.tokenizer, query, sentence,
                                      self.max_sequence_length)
                tokens, segments, mask = pad_batch([encoded])
                probs = torch.softmax(self.model(tokens, segments, mask), dim=-1)
                scores.append(float(probs[0, 1].item()))
        return scores

    def handle_request(self, request: dict) -> dict:
        """Validate one protocol request and score it; raises ValueError
        with a message suitable for the error reply."""
        request_id = request.get("request_id")
        if not isinstance(request_id, str):
            raise ValueError("request_id must be a string")
        query = request.get("query")
        sentences = request.get("sentences")
        if not isinstance(query, str):
            raise ValueError("query must be a string")
        if (not isinstance(sentences, list)
                or any(not isinstance(s, str) for s in sentences)):
            raise ValueError("sentences must be a list of strings")
        return {"request_id": request_id, "scores": self.score(query, sentences)}


class _Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"model": self.server.session.model_name})
        else:
            self._reply(404, {"error": f"no such endpoint: {self.path}"})

    def do_POST(self):
        if self.path != "/score":
            self._reply(404, {"error": f"no such endpoint: {self.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            request = json.loads(body)
        except json.JSONDecodeError as exc:
            self._reply(400, {"error": f"malformed JSON: {exc}"})
            return
        try:
            self._reply(200, self.server.session.handle_request(request))
        except ValueError as exc:
            error = {"error": str(exc)}
            if isinstance(request, dict) and isinstance(request.get("request_id"), str):
                error["request_id"] = request["request_id"]
            self._reply(400, error)

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass


def serve_http(session: ScoringSession, host: str = "127.0.0.1", port: int = 0,
               announce=print) -> ThreadingHTTPServer:
    """Start serving; with port 0 the chosen port is announced as
    "serving on http://host:port" on stdout so callers can attach."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.session = session
    announce(f"serving on http://{server.server_address[0]}:{server.server_address[1]}",
             flush=True)
    return server


def serve_stdio(session: ScoringSession, stdin=None, stdout=None) -> int:
    """One JSON request per stdin line, one reply per stdout line.
    Whole-line parse failures get an error object without request_id."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        request = None
        try:
            request = json.loads(line)
            reply = session.handle_request(request)
        except (json.JSONDecodeError, ValueError) as exc:
            reply = {"error": str(exc)}
            if isinstance(request, dict) and isinstance(request.get("request_id"), str):
                reply["request_id"] = request["request_id"]
        stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
        stdout.flush()
    return 0
