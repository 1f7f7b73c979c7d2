"""Wire-protocol conformance checks for sentence scorers.

Runs the gateway's behavioural contract against any scorer: alignment
(one score per sentence, order-preserving), range ([0, 1]), batching
transparency (partitioning never changes results) and inference
determinism.  For HTTP scorers the health endpoint is checked too.
Used by this package's own gateway tests and by service implementations
to verify themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ScorerError
from .scorer_gateway import HttpScorer, SentenceScorer, score_batch

_PROBE_QUERY = "which documents discuss river flooding"
_PROBE_SENTENCES = [
    "The river flooded the valley in spring.",
    "Totally unrelated sentence about violins.",
    "",
    "短い文です。",
    "word " * 300,
    "punctuation!? and -- symbols #1",
    "河水在春天淹没了山谷。",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _run(name: str, fn) -> CheckResult:
    try:
        fn()
        return CheckResult(name, True)
    except (AssertionError, ScorerError) as exc:
        return CheckResult(name, False, str(exc))


def _check_alignment(scorer: SentenceScorer) -> None:
    for n in (1, 3, len(_PROBE_SENTENCES)):
        scores = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES[:n])
        assert len(scores) == n, f"{n} sentences produced {len(scores)} scores"
    forward = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES)
    backward = score_batch(scorer, _PROBE_QUERY, list(reversed(_PROBE_SENTENCES)))
    assert forward == backward[::-1], "permuting sentences did not permute scores"


def _check_range(scorer: SentenceScorer) -> None:
    scores = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES)
    assert all(0.0 <= s <= 1.0 for s in scores), f"scores outside [0, 1]: {scores}"
    empty_query = score_batch(scorer, "", _PROBE_SENTENCES[:2])
    assert all(0.0 <= s <= 1.0 for s in empty_query), "empty-query scores outside [0, 1]"


def _check_batching(scorer: SentenceScorer) -> None:
    whole = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES)
    for split in (1, 2, 3):
        parts: list[float] = []
        for start in range(0, len(_PROBE_SENTENCES), split):
            parts.extend(score_batch(scorer, _PROBE_QUERY,
                                     _PROBE_SENTENCES[start:start + split]))
        assert parts == whole, f"batch split {split} changed scores"


def _check_determinism(scorer: SentenceScorer) -> None:
    first = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES)
    second = score_batch(scorer, _PROBE_QUERY, _PROBE_SENTENCES)
    assert first == second, "identical request produced different scores"


def run_conformance_checks(scorer: SentenceScorer) -> list[CheckResult]:
    return [
        _run("alignment", lambda: _check_alignment(scorer)),
        _run("range", lambda: _check_range(scorer)),
        _run("batching-transparency", lambda: _check_batching(scorer)),
        _run("determinism", lambda: _check_determinism(scorer)),
    ]


def check_http_service(base_url: str, timeout: float = 60.0) -> list[CheckResult]:
    """Full conformance sweep against a live HTTP scorer, health first."""
    scorer = HttpScorer(base_url, timeout=timeout)

    def health():
        payload = scorer.health()
        assert isinstance(payload.get("model"), str) and payload["model"], \
            f"health payload missing model name: {payload!r}"

    results = [_run("health", health)]
    results.extend(run_conformance_checks(scorer))
    scorer.close()
    return results
