"""Immutable inverted index with collection statistics and a binary file format.

File layout (all integers little-endian)::

    magic    8 bytes  b"EMBQEIDX"
    version  u32
    dim      u32      reserved, always 0
    then one section per field, in fixed order:
      tag    4 bytes ASCII
      size   u64      payload length in bytes
      payload

Postings are kept in CSR form: ``post_offsets[t]:post_offsets[t+1]`` slices
``post_docs``/``post_tfs`` for term id ``t``. Term ids follow sorted term
order. Each document's analyzed token stream is kept as term ids so the
corpus can be dumped for embedding training in original token order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .textpipe import AnalyzedDocument

MAGIC = b"EMBQEIDX"
FORMAT_VERSION = 1

_SECTIONS = (
    ("DOCI", "doc_ids"),
    ("DLEN", "doc_lengths"),
    ("VOCB", "terms"),
    ("POFF", "post_offsets"),
    ("PDOC", "post_docs"),
    ("PTF_", "post_tfs"),
    ("TOFF", "token_offsets"),
    ("TOKS", "token_ids"),
)
_DTYPES = {
    "doc_lengths": "<i8",
    "post_offsets": "<i8",
    "post_docs": "<u4",
    "post_tfs": "<u4",
    "token_offsets": "<i8",
    "token_ids": "<u4",
}


class IndexFormatError(ValueError):
    """Corrupt, truncated or incompatible index file."""


@dataclass(frozen=True)
class TermStats:
    term: str
    df: int
    cf: int


class Index:
    """Read-only inverted index. Build with :func:`build_index` or :func:`load`."""

    def __init__(
        self,
        doc_ids: Sequence[str],
        doc_lengths: np.ndarray,
        terms: Sequence[str],
        post_offsets: np.ndarray,
        post_docs: np.ndarray,
        post_tfs: np.ndarray,
        token_offsets: np.ndarray,
        token_ids: np.ndarray,
    ):
        self.doc_ids = list(doc_ids)
        self.doc_lengths = np.asarray(doc_lengths, dtype=np.int64)
        self.terms = list(terms)
        self.post_offsets = np.asarray(post_offsets, dtype=np.int64)
        self.post_docs = np.asarray(post_docs, dtype=np.uint32)
        self.post_tfs = np.asarray(post_tfs, dtype=np.uint32)
        self.token_offsets = np.asarray(token_offsets, dtype=np.int64)
        self.token_ids = np.asarray(token_ids, dtype=np.uint32)

        self.term_ids = {t: i for i, t in enumerate(self.terms)}
        self.doc_ordinals = {d: i for i, d in enumerate(self.doc_ids)}
        self.df = np.diff(self.post_offsets)
        self.cf = np.add.reduceat(self.post_tfs.astype(np.int64), self.post_offsets[:-1]) if len(self.terms) else np.zeros(0, np.int64)
        self.total_tokens = int(self.doc_lengths.sum())

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def vocabulary_size(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_ids

    def stats(self, term: str) -> TermStats | None:
        tid = self.term_ids.get(term)
        if tid is None:
            return None
        return TermStats(term, int(self.df[tid]), int(self.cf[tid]))

    def postings(self, term: str) -> tuple[np.ndarray, np.ndarray]:
        """(doc ordinals ascending, term frequencies) for ``term``; empty if OOV."""
        tid = self.term_ids.get(term)
        if tid is None:
            return np.zeros(0, np.uint32), np.zeros(0, np.uint32)
        lo, hi = self.post_offsets[tid], self.post_offsets[tid + 1]
        return self.post_docs[lo:hi], self.post_tfs[lo:hi]

    def _check_ordinal(self, doc_ordinal: int) -> None:
        if not 0 <= doc_ordinal < self.num_docs:
            raise IndexError(f"doc ordinal {doc_ordinal} out of range [0, {self.num_docs})")

    def tf(self, term: str, doc_ordinal: int) -> int:
        self._check_ordinal(doc_ordinal)
        docs, tfs = self.postings(term)
        pos = np.searchsorted(docs, doc_ordinal)
        if pos < len(docs) and docs[pos] == doc_ordinal:
            return int(tfs[pos])
        return 0

    def doc_length(self, doc_ordinal: int) -> int:
        self._check_ordinal(doc_ordinal)
        return int(self.doc_lengths[doc_ordinal])

    def doc_tokens(self, doc_ordinal: int) -> list[str]:
        self._check_ordinal(doc_ordinal)
        lo, hi = self.token_offsets[doc_ordinal], self.token_offsets[doc_ordinal + 1]
        return [self.terms[i] for i in self.token_ids[lo:hi]]

    def doc_term_ids(self, doc_ordinal: int) -> np.ndarray:
        """Distinct term ids of a document, ascending."""
        self._check_ordinal(doc_ordinal)
        lo, hi = self.token_offsets[doc_ordinal], self.token_offsets[doc_ordinal + 1]
        return np.unique(self.token_ids[lo:hi])

    def p_ml(self, term: str, doc_ordinal: int) -> float:
        """Maximum-likelihood P(term | doc)."""
        tf = self.tf(term, doc_ordinal)
        if tf == 0:
            return 0.0
        return tf / int(self.doc_lengths[doc_ordinal])

    def p_coll(self, term: str) -> float:
        """Collection model P(term | C) = cf / total tokens."""
        if self.total_tokens == 0:
            raise ValueError("collection probability undefined on an empty index")
        tid = self.term_ids.get(term)
        if tid is None:
            return 0.0
        return int(self.cf[tid]) / self.total_tokens

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Index):
            return NotImplemented
        return (
            self.doc_ids == other.doc_ids
            and self.terms == other.terms
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in _DTYPES
            )
        )

    __hash__ = None


def build_index(docs: Iterable[AnalyzedDocument]) -> Index:
    """Build an index; doc ordinals follow input order."""
    docs = list(docs)
    seen = set()
    for d in docs:
        if d.doc_id in seen:
            raise ValueError(f"duplicate doc_id {d.doc_id!r}")
        seen.add(d.doc_id)

    terms = sorted({t for d in docs for t in d.tokens})
    term_ids = {t: i for i, t in enumerate(terms)}
    lengths = np.array([len(d.tokens) for d in docs], dtype=np.int64)
    token_offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=token_offsets[1:])
    token_ids = np.fromiter(
        (term_ids[t] for d in docs for t in d.tokens), dtype=np.uint32, count=int(lengths.sum())
    )
    doc_of_token = np.repeat(np.arange(len(docs), dtype=np.int64), lengths)

    # (term, doc) pairs sorted term-major, doc-minor; run-length gives tf
    if len(token_ids):
        key = token_ids.astype(np.int64) * max(len(docs), 1) + doc_of_token
        uniq, tfs = np.unique(key, return_counts=True)
        pair_terms = uniq // max(len(docs), 1)
        pair_docs = uniq % max(len(docs), 1)
    else:
        pair_terms = pair_docs = tfs = np.zeros(0, np.int64)
    post_offsets = np.zeros(len(terms) + 1, dtype=np.int64)
    np.cumsum(np.bincount(pair_terms, minlength=len(terms)), out=post_offsets[1:])

    return Index(
        [d.doc_id for d in docs],
        lengths,
        terms,
        post_offsets,
        pair_docs.astype(np.uint32),
        tfs.astype(np.uint32),
        token_offsets,
        token_ids,
    )


def _pack_strings(items: Sequence[str]) -> bytes:
    encoded = [s.encode("utf-8") for s in items]
    lengths = np.array([len(b) for b in encoded], dtype="<u4")
    return struct.pack("<Q", len(encoded)) + lengths.tobytes() + b"".join(encoded)


def _unpack_strings(payload: bytes, field: str) -> list[str]:
    if len(payload) < 8:
        raise IndexFormatError(f"section {field}: truncated count")
    (n,) = struct.unpack_from("<Q", payload)
    if len(payload) < 8 + 4 * n:
        raise IndexFormatError(f"section {field}: truncated length table")
    lengths = np.frombuffer(payload, dtype="<u4", count=n, offset=8)
    pos = 8 + 4 * n
    if pos + int(lengths.sum()) != len(payload):
        raise IndexFormatError(f"section {field}: string data size mismatch")
    out = []
    for ln in lengths:
        out.append(payload[pos : pos + int(ln)].decode("utf-8"))
        pos += int(ln)
    return out


def save(index: Index, path: str | Path) -> None:
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, 0)]
    for tag, field in _SECTIONS:
        value = getattr(index, field)
        if field in _DTYPES:
            payload = np.ascontiguousarray(value, dtype=_DTYPES[field]).tobytes()
        else:
            payload = _pack_strings(value)
        parts.append(tag.encode("ascii") + struct.pack("<Q", len(payload)) + payload)
    Path(path).write_bytes(b"".join(parts))


def load(path: str | Path) -> Index:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise IndexFormatError("header: file too short")
    if data[:8] != MAGIC:
        raise IndexFormatError("header: bad magic bytes (not an index file)")
    version, _dim = struct.unpack_from("<II", data, 8)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"header: unsupported format version {version}")
    pos = 16
    fields = {}
    for tag, field in _SECTIONS:
        if pos + 12 > len(data):
            raise IndexFormatError(f"section {field}: truncated header")
        got = data[pos : pos + 4].decode("ascii", "replace")
        if got != tag:
            raise IndexFormatError(f"section {field}: expected tag {tag!r}, found {got!r}")
        (size,) = struct.unpack_from("<Q", data, pos + 4)
        pos += 12
        if pos + size > len(data):
            raise IndexFormatError(f"section {field}: truncated payload")
        payload = data[pos : pos + size]
        pos += size
        if field in _DTYPES:
            itemsize = np.dtype(_DTYPES[field]).itemsize
            if size % itemsize:
                raise IndexFormatError(f"section {field}: size not a multiple of {itemsize}")
            fields[field] = np.frombuffer(payload, dtype=_DTYPES[field]).copy()
        else:
            fields[field] = _unpack_strings(payload, field)
    if pos != len(data):
        raise IndexFormatError("trailing bytes after last section")

    n_docs, n_terms = len(fields["doc_ids"]), len(fields["terms"])
    if len(fields["doc_lengths"]) != n_docs or len(fields["token_offsets"]) != n_docs + 1:
        raise IndexFormatError("doc_lengths/token_offsets: inconsistent with doc_ids")
    if len(fields["post_offsets"]) != n_terms + 1:
        raise IndexFormatError("post_offsets: inconsistent with terms")
    if len(fields["post_docs"]) != len(fields["post_tfs"]) or (
        n_terms and fields["post_offsets"][-1] != len(fields["post_docs"])
    ):
        raise IndexFormatError("post_docs/post_tfs: inconsistent with post_offsets")
    if fields["token_offsets"][-1] != len(fields["token_ids"]):
        raise IndexFormatError("token_ids: inconsistent with token_offsets")
    return Index(**fields)
