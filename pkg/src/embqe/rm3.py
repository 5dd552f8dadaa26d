"""RM3 pseudo-relevance feedback baseline.

RM1: P(w|R) proportional to sum over feedback docs D of P(w|D) * P(Q|D), with
JM-smoothed document models. P(Q|D) is the product of P(q|D) over the
distinct in-collection terms of the query model. RM3 truncates RM1 and
interpolates it with the original query model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .index import Index
from .lm import DEFAULT_LAMBDA, QueryModel, mle_query_model, retrieve


@dataclass
class RelevanceModel:
    weights: dict[str, float]

    def top(self, n: int) -> list[tuple[str, float]]:
        return sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def _smoothed(index: Index, doc: int, term_ids: np.ndarray, lam: float) -> np.ndarray:
    lo, hi = index.token_offsets[doc], index.token_offsets[doc + 1]
    ids, counts = np.unique(index.token_ids[lo:hi], return_counts=True)
    pos = np.minimum(np.searchsorted(ids, term_ids), max(len(ids) - 1, 0))
    tf = np.where(ids[pos] == term_ids, counts[pos], 0) if len(ids) else np.zeros(len(term_ids))
    length = float(index.doc_lengths[doc])
    p_ml = tf / length
    p_coll = index.cf[term_ids] / index.total_tokens
    return (1.0 - lam) * p_ml + lam * p_coll


def estimate_rm1(
    index: Index, qm: QueryModel, lam: float = DEFAULT_LAMBDA, fb_docs: int = 10
) -> RelevanceModel:
    if fb_docs < 1:
        raise ValueError("fb_docs must be >= 1")
    run = retrieve(index, qm, lam, k=fb_docs)
    if not run.entries:
        raise ValueError("no documents retrieved for relevance-model estimation")
    # ordinal order makes the sum independent of ranking order
    docs = sorted(index.doc_ordinals[d] for d, _ in run.entries)
    vocab = np.unique(np.concatenate([index.doc_term_ids(d) for d in docs]))
    q_ids = np.array([index.term_ids[t] for t in qm if t in index.term_ids], dtype=np.int64)

    models = np.vstack([_smoothed(index, d, vocab, lam) for d in docs])
    loglik = np.array([np.log(_smoothed(index, d, q_ids, lam)).sum() for d in docs])
    doc_weight = np.exp(loglik - loglik.max())
    rel = (models * doc_weight[:, None]).sum(axis=0)
    rel /= rel.sum()
    return RelevanceModel({index.terms[t]: float(p) for t, p in zip(vocab, rel)})


def rm3_expand(rm1: RelevanceModel, qm: QueryModel, n_terms: int, mix: float = 0.5) -> QueryModel:
    """mix * P(w|Q) + (1 - mix) * top-``n_terms`` RM1, renormalised."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if not 0.0 <= mix <= 1.0:
        raise ValueError("mix must lie in [0, 1]")
    if mix == 1.0:
        return qm
    top = rm1.top(n_terms)
    total = sum(p for _, p in top)
    weights = {t: mix * qm[t] for t in qm}
    for t, p in top:
        weights[t] = weights.get(t, 0.0) + (1.0 - mix) * p / total
    return QueryModel.normalized(weights)


def rm3_query_model(
    index: Index,
    query_terms: list[str],
    lam: float = DEFAULT_LAMBDA,
    fb_docs: int = 10,
    n_terms: int = 20,
    mix: float = 0.5,
) -> QueryModel:
    qm = mle_query_model(query_terms)
    rm1 = estimate_rm1(index, qm, lam, fb_docs)
    return rm3_expand(rm1, qm, n_terms, mix)
