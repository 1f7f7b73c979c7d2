"""Sentence relevance classifier service.

Fine-tunes a compact transformer for query/sentence relevance
classification and serves it over a small JSON wire protocol (HTTP or
stdio), one score per sentence in [0, 1].
"""

__version__ = "0.1.0"
