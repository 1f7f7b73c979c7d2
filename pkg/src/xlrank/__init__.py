"""Multilingual document ranking toolkit.

Two-stage pipeline: BM25 candidate retrieval over an in-memory inverted
index, followed by reranking that interpolates the document retrieval
score with its top-k sentence relevance scores.  Includes grid-search
cross-validation for the interpolation parameters, TREC-style run and
qrels I/O, standard evaluation metrics (AP, P@20, NDCG@20), and a batch
CLI that also renders report figures.
"""

__version__ = "0.1.0"
