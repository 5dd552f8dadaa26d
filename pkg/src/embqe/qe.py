"""Embedding-based query expansion: pre-retrieval, post-retrieval and
incremental kNN, with optional bigram composition of query terms.

Pipeline for one topic:

1. build the extended query term set (one unit per covered query term, plus
   one composed unit per adjacent covered pair when composition is on);
2. collect candidates as the union of each unit's neighbours;
3. score each candidate by its mean cosine to the units and keep the top K;
4. interpolate the ML query model with the normalised similarity scores.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Collection, Iterable, Literal, TextIO

import numpy as np

from .embed import EmbeddingStore, compose_bigram, incremental_nn, knn
from .index import Index
from .lm import DEFAULT_LAMBDA, QueryModel, mle_query_model, retrieve
from .textpipe import Topic

log = logging.getLogger(__name__)

Method = Literal["pre", "post", "incremental"]
METHODS = ("pre", "post", "incremental")


class QueryNotCovered(ValueError):
    """No query term has an embedding."""


class NoCandidates(ValueError):
    """Expansion produced no candidate terms."""


@dataclass
class ExpansionConfig:
    method: Method = "pre"
    use_composition: bool = True
    K: int = 50
    alpha: float = 0.6
    fb_docs: int = 10
    n_per_unit: int | None = None
    n_initial: int | None = None
    prune_k: int | None = None
    l: int = 5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown expansion method {self.method!r}")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.method == "post" and self.fb_docs < 1:
            raise ValueError("fb_docs must be >= 1 for post-retrieval expansion")
        if self.l < 1:
            raise ValueError("l must be >= 1")

    @property
    def neighbors_per_unit(self) -> int:
        return self.n_per_unit or self.K

    @property
    def prune_amount(self) -> int:
        if self.prune_k is not None:
            return self.prune_k
        return math.ceil(self.neighbors_per_unit / 5)

    @property
    def initial_neighbors(self) -> int:
        if self.n_initial is not None:
            return self.n_initial
        k = self.neighbors_per_unit
        return max(10 * k, self.l * (self.prune_amount + 1) + k)


@dataclass
class Eqts:
    query_id: str
    query_terms: tuple[str, ...]
    labels: list[str]
    vectors: np.ndarray  # (units, D), unit rows
    uncovered: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.labels)


def build_eqts(topic: Topic, store: EmbeddingStore, use_composition: bool = True) -> Eqts:
    terms = topic.title_terms
    if not terms:
        raise ValueError("empty query")
    labels, vecs = [], []
    for t in terms:
        if t in store:
            labels.append(t)
            vecs.append(store.vector(t))
    if use_composition:
        for a, b in zip(terms, terms[1:]):
            if a in store and b in store:
                try:
                    vecs.append(compose_bigram(store, a, b))
                except ValueError:
                    log.warning("query %s: bigram <%s,%s> cancels out; skipped", topic.query_id, a, b)
                    continue
                labels.append(f"{a}+{b}")
    uncovered = [t for t in terms if t not in store]
    if not labels:
        raise QueryNotCovered(f"query {topic.query_id} uncovered by embeddings")
    return Eqts(topic.query_id, tuple(terms), labels, np.vstack(vecs), uncovered)


def generate_candidates(
    eqts: Eqts,
    store: EmbeddingStore,
    cfg: ExpansionConfig,
    prf_terms: Collection[str] | None = None,
) -> set[str]:
    if cfg.method == "post" and prf_terms is None:
        raise ValueError("post-retrieval expansion needs the feedback-document terms")
    domain = prf_terms if cfg.method == "post" else None
    exclude = set(eqts.query_terms)
    out: set[str] = set()
    for label, vec in zip(eqts.labels, eqts.vectors):
        if cfg.method == "incremental":
            nl = incremental_nn(
                store, vec, cfg.initial_neighbors, cfg.prune_amount, cfg.l,
                domain=domain, exclude=exclude, label=label,
            )
        else:
            nl = knn(store, vec, cfg.neighbors_per_unit, domain=domain, exclude=exclude, label=label)
        out.update(nl.terms)
    if not out:
        raise NoCandidates(f"query {eqts.query_id}: no expandable neighbors")
    return out


def mean_similarities(terms: list[str], eqts: Eqts, store: EmbeddingStore) -> np.ndarray:
    """Mean cosine of each term to all units of ``eqts``."""
    rows = np.array([store.row[t] for t in terms], dtype=np.int64)
    sims = np.einsum("ij,kj->ik", store.matrix[rows], eqts.vectors)
    return sims.mean(axis=1)


def mean_similarity(term: str, eqts: Eqts, store: EmbeddingStore) -> float:
    if term not in store:
        raise KeyError(f"term {term!r} has no embedding")
    return float(mean_similarities([term], eqts, store)[0])


@dataclass
class Expansion:
    """Expanded query plus the bookkeeping needed to audit it."""

    query_id: str
    model: QueryModel
    expansion_terms: list[str] = field(default_factory=list)
    note: str = ""


def feedback_terms(index: Index, qm: QueryModel, lam: float, fb_docs: int) -> set[str]:
    """Union of index terms over the top ``fb_docs`` documents for ``qm``."""
    run = retrieve(index, qm, lam, k=max(1, min(fb_docs, max(index.num_docs, 1))))
    ids: set[int] = set()
    for doc_id, _ in run.entries:
        ids.update(index.doc_term_ids(index.doc_ordinals[doc_id]).tolist())
    return {index.terms[i] for i in ids}


def interpolate(mle: QueryModel, sims: dict[str, float], alpha: float) -> QueryModel | None:
    """alpha * P(w|Q) + (1 - alpha) * Sim(w) / sum(Sim); None when sum(Sim) is 0."""
    clamped = {t: max(s, 0.0) for t, s in sims.items()}
    total = sum(clamped[t] for t in sorted(clamped))
    if total <= 0:
        return None
    weights = {t: alpha * mle[t] + (1.0 - alpha) * s / total for t, s in clamped.items()}
    return QueryModel.normalized(weights)


def expand(
    topic: Topic,
    index: Index,
    store: EmbeddingStore,
    cfg: ExpansionConfig,
    lam: float = DEFAULT_LAMBDA,
    prf_terms: Collection[str] | None = None,
) -> Expansion:
    """Expanded query model for one topic.

    For the post method, ``prf_terms`` defaults to the terms of the top
    ``cfg.fb_docs`` documents retrieved with the unexpanded model.
    """
    mle = mle_query_model(topic.title_terms)
    if cfg.alpha == 1.0:
        return Expansion(topic.query_id, mle, note="alpha=1")
    eqts = build_eqts(topic, store, cfg.use_composition)
    if cfg.method == "post" and prf_terms is None:
        prf_terms = feedback_terms(index, mle, lam, cfg.fb_docs)
    cands = sorted(generate_candidates(eqts, store, cfg, prf_terms))
    cand_sims = mean_similarities(cands, eqts, store)
    order = sorted(range(len(cands)), key=lambda i: (-cand_sims[i], cands[i]))[: cfg.K]
    chosen = [cands[i] for i in order]

    sims = {cands[i]: float(cand_sims[i]) for i in order}
    covered = [t for t in mle if t in store]
    if covered:
        sims.update(zip(covered, mean_similarities(covered, eqts, store).tolist()))
    for t in mle:
        sims.setdefault(t, 0.0)
    model = interpolate(mle, sims, cfg.alpha)
    if model is None:
        log.warning("query %s: all similarities non-positive; using unexpanded model", topic.query_id)
        return Expansion(topic.query_id, mle, note="zero-similarity fallback")
    return Expansion(topic.query_id, model, chosen)


def write_expansions(
    expansions: Iterable[Expansion], method: str, params: dict, out: TextIO
) -> None:
    """JSONL audit records: {query_id, method, params, terms: [{term, weight}]}."""
    for e in expansions:
        rec = {
            "query_id": e.query_id,
            "method": method,
            "params": params,
            "terms": [{"term": t, "weight": w} for t, w in e.model.items()],
        }
        out.write(json.dumps(rec, sort_keys=True) + "\n")


def read_expansions(stream: TextIO) -> dict[str, QueryModel]:
    models = {}
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            models[str(rec["query_id"])] = QueryModel(
                {d["term"]: float(d["weight"]) for d in rec["terms"]}
            )
        except (KeyError, TypeError, json.JSONDecodeError, ValueError) as exc:
            raise ValueError(f"line {lineno}: bad expansion record ({exc})") from None
    return models


def config_params(cfg: ExpansionConfig) -> dict:
    return asdict(cfg)
