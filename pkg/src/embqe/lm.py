"""Jelinek-Mercer smoothed query-likelihood ranking.

Smoothed document model: (1 - lam) * P_ml(w|d) + lam * P(w|C), i.e. ``lam``
weighs the collection model. A document's score against a weighted query
model q is sum_w q(w) * log(smoothed P(w|d)); terms absent from the collection
are skipped.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .index import Index

DEFAULT_LAMBDA = 0.6
DEFAULT_K = 1000


class QueryModel:
    """Probability distribution over query terms."""

    __slots__ = ("weights",)

    def __init__(self, weights: Mapping[str, float], tol: float = 1e-9):
        if not weights:
            raise ValueError("query model is empty")
        bad = [t for t, w in weights.items() if not w > 0]
        if bad:
            raise ValueError(f"non-positive weight for term(s) {bad}")
        total = sum(weights.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"query model weights sum to {total!r}, not 1")
        self.weights = dict(sorted(weights.items()))

    @classmethod
    def normalized(cls, weights: Mapping[str, float]) -> "QueryModel":
        """Drop non-positive entries and rescale the rest to sum to 1."""
        kept = {t: float(w) for t, w in weights.items() if w > 0}
        total = sum(kept.values())
        if total <= 0:
            raise ValueError("query model has no positive weight")
        return cls({t: w / total for t, w in kept.items()})

    def __getitem__(self, term: str) -> float:
        return self.weights.get(term, 0.0)

    def __iter__(self):
        return iter(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QueryModel) and self.weights == other.weights

    def __repr__(self) -> str:
        inner = ", ".join(f"{t}: {w:.4g}" for t, w in self.weights.items())
        return f"QueryModel({{{inner}}})"


def mle_query_model(query_terms: Sequence[str]) -> QueryModel:
    """P(w|Q) = count(w, Q) / |Q|."""
    if not query_terms:
        raise ValueError("empty query")
    counts = Counter(query_terms)
    n = len(query_terms)
    return QueryModel({t: c / n for t, c in counts.items()})


@dataclass
class RankedList:
    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"smoothing lambda must lie in (0, 1), got {lam}")


def smoothed_log(p_ml, p_coll, lam: float):
    """log((1 - lam) * p_ml + lam * p_coll), elementwise."""
    return np.log((1.0 - lam) * p_ml + lam * p_coll)


def _query_terms(index: Index, qm: QueryModel) -> list[tuple[str, float, float]]:
    out = []
    for term, w in qm.items():
        pc = index.p_coll(term)
        if pc > 0:
            out.append((term, w, pc))
    return out


def score_document(index: Index, doc_ordinal: int, qm: QueryModel, lam: float = DEFAULT_LAMBDA) -> float:
    _check_lambda(lam)
    length = index.doc_length(doc_ordinal)
    score = np.zeros(1)
    for term, w, pc in _query_terms(index, qm):
        p_ml = index.tf(term, doc_ordinal) / length if length else 0.0
        score += w * smoothed_log(np.array([p_ml]), pc, lam)
    return float(score[0])


def score_candidates(index: Index, qm: QueryModel, lam: float = DEFAULT_LAMBDA) -> tuple[np.ndarray, np.ndarray]:
    """Score every document matching at least one in-vocabulary query term.

    Returns (doc ordinals ascending, scores).
    """
    _check_lambda(lam)
    terms = _query_terms(index, qm)
    plists = [index.postings(t) for t, _, _ in terms]
    if not plists:
        return np.zeros(0, np.int64), np.zeros(0)
    cands = np.unique(np.concatenate([d for d, _ in plists])).astype(np.int64)
    lengths = index.doc_lengths[cands].astype(np.float64)
    scores = np.zeros(len(cands))
    tf = np.zeros(len(cands))
    for (term, w, pc), (docs, tfs) in zip(terms, plists):
        tf[:] = 0.0
        tf[np.searchsorted(cands, docs)] = tfs
        # term-at-a-time accumulation in sorted term order
        scores += w * smoothed_log(tf / lengths, pc, lam)
    return cands, scores


def retrieve(
    index: Index,
    qm: QueryModel,
    lam: float = DEFAULT_LAMBDA,
    k: int = DEFAULT_K,
    query_id: str = "",
) -> RankedList:
    """Top-``k`` documents; ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cands, scores = score_candidates(index, qm, lam)
    if len(cands) == 0:
        return RankedList(query_id, [])
    doc_ids = [index.doc_ids[i] for i in cands]
    if len(cands) > k:
        # keep everything tied with the k-th best score, then sort exactly
        kth = np.partition(scores, len(scores) - k)[len(scores) - k]
        keep = np.flatnonzero(scores >= kth)
    else:
        keep = np.arange(len(cands))
    ordered = sorted(keep.tolist(), key=lambda i: (-scores[i], doc_ids[i]))[:k]
    return RankedList(query_id, [(doc_ids[i], float(scores[i])) for i in ordered])


def format_run(runs: Iterable[RankedList], tag: str) -> str:
    """TREC 6-column run text: ``qid Q0 docid rank score tag``."""
    lines = []
    for run in runs:
        for rank, (doc_id, score) in enumerate(run.entries, 1):
            # repr keeps full precision so re-parsed runs sort identically
            lines.append(f"{run.query_id} Q0 {doc_id} {rank} {score!r} {tag}\n")
    return "".join(lines)


def write_run(runs: Iterable[RankedList], tag: str, out: TextIO) -> None:
    out.write(format_run(runs, tag))
