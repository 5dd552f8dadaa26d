"""Word-embedding store, cosine kNN and the iteratively pruned neighbour list."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Collection, Iterable, TextIO

import numpy as np

log = logging.getLogger(__name__)


class VectorFormatError(ValueError):
    pass


@dataclass
class NeighborList:
    anchor: str
    neighbors: list[tuple[str, float]] = field(default_factory=list)

    @property
    def terms(self) -> list[str]:
        return [t for t, _ in self.neighbors]


class EmbeddingStore:
    """Unit-normalised term vectors. Rows of ``matrix`` follow ``terms``."""

    def __init__(self, terms: list[str], vectors: np.ndarray, duplicates: int = 0):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(terms):
            raise ValueError("vectors must be a (len(terms), D) array")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            bad = terms[int(np.flatnonzero(norms == 0)[0])]
            raise ValueError(f"zero vector for term {bad!r}")
        self.terms = list(terms)
        self.row = {t: i for i, t in enumerate(self.terms)}
        if len(self.row) != len(self.terms):
            raise ValueError("duplicate terms")
        self.dimension = vectors.shape[1]
        self.raw_norms = dict(zip(self.terms, norms.tolist()))
        self.matrix = vectors / norms[:, None]
        self.duplicates = duplicates
        # rank of each row under ascending term order, for tie-breaking
        order = sorted(range(len(self.terms)), key=self.terms.__getitem__)
        self.alpha_rank = np.empty(len(self.terms), dtype=np.int64)
        self.alpha_rank[order] = np.arange(len(self.terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.row

    def vector(self, term: str) -> np.ndarray:
        try:
            return self.matrix[self.row[term]]
        except KeyError:
            raise KeyError(f"term {term!r} has no embedding") from None

    def similarities(self, anchor: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
        """Dot products of stored rows with a unit anchor."""
        m = self.matrix if rows is None else self.matrix[rows]
        # einsum evaluates each row identically, so equal rows get equal scores
        return np.einsum("ij,j->i", m, anchor)


def load_vectors(stream: TextIO) -> EmbeddingStore:
    """Read word2vec text format: ``count dim`` header, then ``term v1 .. vD``."""
    header = stream.readline()
    parts = header.split()
    if len(parts) != 2:
        raise VectorFormatError("line 1: expected header 'vocab_count dim'")
    try:
        _count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise VectorFormatError("line 1: non-integer header") from None
    if dim < 1:
        raise VectorFormatError("line 1: dimension must be positive")

    terms: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    duplicates = 0
    for lineno, line in enumerate(stream, 2):
        fields = line.rstrip("\n").rstrip().split(" ")
        if fields == [""]:
            continue
        term, values = fields[0], fields[1:]
        if len(values) != dim:
            raise VectorFormatError(f"line {lineno}: expected {dim} values, found {len(values)}")
        try:
            vec = np.array(values, dtype=np.float64)
        except ValueError:
            raise VectorFormatError(f"line {lineno}: unparseable value") from None
        if not np.any(vec):
            raise VectorFormatError(f"line {lineno}: zero vector for {term!r}")
        if term in seen:
            duplicates += 1
            continue
        seen.add(term)
        terms.append(term)
        rows.append(vec)
    if duplicates:
        log.warning("%d duplicate term line(s) ignored; first occurrence kept", duplicates)
    matrix = np.vstack(rows) if rows else np.zeros((0, dim))
    return EmbeddingStore(terms, matrix, duplicates)


def write_vectors(store: EmbeddingStore, out: TextIO, raw: bool = True) -> None:
    out.write(f"{len(store)} {store.dimension}\n")
    for t in store.terms:
        v = store.vector(t) * (store.raw_norms[t] if raw else 1.0)
        out.write(t + " " + " ".join(repr(float(x)) for x in v) + "\n")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine undefined for a zero vector")
    return float(np.dot(u, v) / (nu * nv))


def unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalise a zero vector")
    return v / n


def compose_bigram(store: EmbeddingStore, t1: str, t2: str) -> np.ndarray:
    """Normalised sum of two term vectors."""
    for t in (t1, t2):
        if t not in store:
            raise KeyError(f"term {t!r} has no embedding")
    summed = store.vector(t1) + store.vector(t2)
    n = np.linalg.norm(summed)
    if n < 1e-12:
        raise ValueError(f"vectors of {t1!r} and {t2!r} cancel out")
    return summed / n


def _domain_rows(store: EmbeddingStore, domain: Collection[str] | None, exclude: Collection[str]) -> np.ndarray:
    if domain is None:
        rows = np.arange(len(store))
        if exclude:
            drop = [store.row[t] for t in exclude if t in store.row]
            rows = np.setdiff1d(rows, drop, assume_unique=True)
        return rows
    return np.array(
        sorted(store.row[t] for t in set(domain) if t in store.row and t not in exclude),
        dtype=np.int64,
    )


def _top_n(store: EmbeddingStore, rows: np.ndarray, sims: np.ndarray, n: int) -> list[tuple[str, float]]:
    if len(rows) > n:
        kth = np.partition(sims, len(sims) - n)[len(sims) - n]
        keep = np.flatnonzero(sims >= kth)
        rows, sims = rows[keep], sims[keep]
    order = np.lexsort((store.alpha_rank[rows], -sims))[:n]
    return [(store.terms[rows[i]], float(sims[i])) for i in order]


def knn(
    store: EmbeddingStore,
    anchor: np.ndarray,
    n: int,
    domain: Collection[str] | None = None,
    exclude: Collection[str] = (),
    label: str = "",
) -> NeighborList:
    """Exact top-``n`` terms by cosine with ``anchor``; ties by ascending term."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = _domain_rows(store, domain, set(exclude))
    if len(rows) == 0:
        return NeighborList(label, [])
    sims = store.similarities(unit(anchor), rows)
    return NeighborList(label, _top_n(store, rows, sims, n))


def incremental_nn(
    store: EmbeddingStore,
    anchor: np.ndarray,
    n_initial: int,
    prune_k: int,
    l: int = 5,
    domain: Collection[str] | None = None,
    exclude: Collection[str] = (),
    label: str = "",
) -> NeighborList:
    """Iteratively pruned neighbour list.

    Starting from the ``n_initial`` nearest neighbours of ``anchor``, each of
    ``l`` rounds takes the next pivot (the head of the surviving list after
    the pivots already used), reorders every term after it by similarity to
    the pivot and drops the ``prune_k`` least similar. Pivots are never
    pruned. Survivors come back ordered by similarity to ``anchor``.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if prune_k < 0:
        raise ValueError("prune_k must be >= 0")
    if n_initial < 1 or (prune_k and n_initial < l * (prune_k + 1)):
        raise ValueError(
            f"n_initial={n_initial} cannot survive {l} rounds pruning {prune_k} after each pivot"
        )
    anchor = unit(anchor)
    base = knn(store, anchor, n_initial, domain, exclude, label)
    to_anchor = dict(base.neighbors)
    current = base.terms
    for pos in range(l):
        if pos >= len(current) - 1:
            break
        pivot = store.vector(current[pos])
        tail = current[pos + 1 :]
        sims = store.similarities(pivot, np.array([store.row[t] for t in tail]))
        order = sorted(range(len(tail)), key=lambda i: (-sims[i], tail[i]))
        keep = len(tail) - min(prune_k, len(tail))
        current = current[: pos + 1] + [tail[i] for i in order[:keep]]
    survivors = sorted(current, key=lambda t: (-to_anchor[t], t))
    return NeighborList(label, [(t, to_anchor[t]) for t in survivors])
