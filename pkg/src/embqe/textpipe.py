"""Text analysis and TREC-style corpus/topic ingestion.

The same analysis chain (ASCII-fold lowercase, split on non-alphanumerics,
SMART stoplist, Porter stemming) is used for documents, topics and the
corpus dump fed to the embedding trainer, so all vocabularies line up.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import BinaryIO, Iterable, Iterator

from .porter import porter_stem

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class ParseError(ValueError):
    """Malformed corpus, topic or judgment input."""


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str


@dataclass(frozen=True)
class AnalyzedDocument:
    doc_id: str
    tokens: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Topic:
    query_id: str
    title_terms: tuple[str, ...]
    title: str = field(default="", compare=False)


def read_stoplist(lines: Iterable[str]) -> frozenset[str]:
    words = set()
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def smart_stoplist() -> frozenset[str]:
    """The bundled 571-entry SMART stoplist."""
    text = resources.files("embqe").joinpath("data/smart_stoplist.txt").read_text("utf-8")
    return read_stoplist(text.splitlines())


def _fold(text: str) -> str:
    # ASCII-only lowercase; non-ASCII letters become separators
    return text.encode("ascii", "replace").decode("ascii").lower()


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(_fold(text))


def analyze(text: str, stoplist: frozenset[str] | None = None) -> list[str]:
    """Lowercase, tokenize, drop stopwords, Porter-stem; order preserved."""
    if stoplist is None:
        stoplist = smart_stoplist()
    return [porter_stem(t) for t in tokenize(text) if t not in stoplist]


def analyze_document(doc: RawDocument, stoplist: frozenset[str] | None = None) -> AnalyzedDocument:
    return AnalyzedDocument(doc.doc_id, tuple(analyze(doc.text, stoplist)))


def _first_nonspace(data: bytes) -> int | None:
    stripped = data.lstrip()
    return stripped[0] if stripped else None


_DOC_RE = re.compile(rb"<DOC>(.*?)</DOC>", re.S | re.I)
_DOCNO_RE = re.compile(rb"<DOCNO>\s*(.*?)\s*</DOCNO>", re.S | re.I)
_TEXT_RE = re.compile(rb"<TEXT>(.*?)</TEXT>", re.S | re.I)
_OPEN_DOC_RE = re.compile(rb"<DOC>", re.I)


def _parse_sgml_docs(data: bytes) -> Iterator[RawDocument]:
    pos = 0
    while True:
        start = _OPEN_DOC_RE.search(data, pos)
        if start is None:
            return
        m = _DOC_RE.match(data, start.start())
        if m is None:
            raise ParseError(f"unterminated <DOC> block at byte offset {start.start()}")
        nested = _OPEN_DOC_RE.search(m.group(1))
        if nested is not None:
            raise ParseError(f"unterminated <DOC> block at byte offset {start.start()}")
        body = m.group(1)
        docno = _DOCNO_RE.search(body)
        if docno is None or not docno.group(1).strip():
            raise ParseError(f"<DOC> without DOCNO at byte offset {start.start()}")
        text = " ".join(t.decode("utf-8", "replace") for t in _TEXT_RE.findall(body))
        yield RawDocument(docno.group(1).decode("utf-8", "replace"), text)
        pos = m.end()


def _parse_jsonl(data: bytes, keys: tuple[str, ...]) -> Iterator[dict]:
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        missing = [k for k in keys if k not in obj]
        if missing:
            raise ParseError(f"line {lineno}: missing field(s) {', '.join(missing)}")
        yield obj


def parse_trec_docs(stream: BinaryIO | bytes) -> list[RawDocument]:
    """Parse TREC SGML ``<DOC>`` blocks, or JSONL if the input starts with ``{``."""
    data = stream if isinstance(stream, bytes) else stream.read()
    if _first_nonspace(data) == ord("{"):
        docs = [
            RawDocument(str(o["doc_id"]), str(o["text"]))
            for o in _parse_jsonl(data, ("doc_id", "text"))
        ]
    else:
        docs = list(_parse_sgml_docs(data))
    seen = set()
    for d in docs:
        if not d.doc_id:
            raise ParseError("empty doc_id")
        if d.doc_id in seen:
            raise ParseError(f"duplicate doc_id {d.doc_id!r}")
        seen.add(d.doc_id)
    return docs


def write_jsonl_docs(docs: Iterable[RawDocument]) -> bytes:
    return "".join(
        json.dumps({"doc_id": d.doc_id, "text": d.text}) + "\n" for d in docs
    ).encode("utf-8")


_TOP_RE = re.compile(rb"<top>(.*?)</top>", re.S | re.I)
# fields in TREC topic files are usually unclosed: <num> Number: 301 <title> ...
_NUM_RE = re.compile(rb"<num>\s*(?:Number:)?\s*(.*?)\s*(?=<|$)", re.S | re.I)
_TITLE_RE = re.compile(rb"<title>\s*(?:Topic:)?\s*(.*?)\s*(?=<|$)", re.S | re.I)


def _normalize_qid(raw: str) -> str:
    digits = re.search(r"\d+", raw)
    return str(int(digits.group())) if digits else raw.strip()


def parse_topics(
    stream: BinaryIO | bytes, stoplist: frozenset[str] | None = None
) -> list[Topic]:
    """Parse TREC ``<top>`` topics (title field only) or JSONL ``{query_id, title}``."""
    data = stream if isinstance(stream, bytes) else stream.read()
    raw: list[tuple[str, str]] = []
    if _first_nonspace(data) == ord("{"):
        for o in _parse_jsonl(data, ("query_id", "title")):
            raw.append((str(o["query_id"]), str(o["title"])))
    else:
        for m in _TOP_RE.finditer(data):
            body = m.group(1)
            num = _NUM_RE.search(body)
            title = _TITLE_RE.search(body)
            if num is None or title is None:
                raise ParseError(f"topic at byte offset {m.start()} lacks <num> or <title>")
            raw.append((num.group(1).decode("utf-8", "replace"), title.group(1).decode("utf-8", "replace")))

    topics = []
    empty = []
    for qid, title in raw:
        qid = _normalize_qid(qid)
        terms = analyze(title, stoplist)
        if not terms:
            empty.append(qid)
            continue
        topics.append(Topic(qid, tuple(terms), " ".join(title.split())))
    if empty:
        raise ParseError(f"topic(s) with empty analyzed title: {', '.join(empty)}")
    return topics
