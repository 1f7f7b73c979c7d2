"""Shared exception types and CLI exit codes."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SCORER = 3


class XlrankError(Exception):
    """Base class for all toolkit errors."""


class DataError(XlrankError):
    """Malformed or inconsistent input data (corpus, topics, qrels, runs)."""


class ScorerError(XlrankError):
    """Base class for sentence-scorer failures."""


class ScorerTransportError(ScorerError):
    """Transport-level failure talking to an external scorer; retriable."""


class ScorerProtocolError(ScorerError):
    """External scorer violated the wire contract (wrong count, bad range)."""

    def __init__(self, message: str, request_id: str | None = None):
        if request_id:
            message = f"{message} (request_id={request_id})"
        super().__init__(message)
        self.request_id = request_id
