"""Small constructed test collection where relevant documents use only
synonyms of the query words, and the embedding space puts those synonyms
next to the query words. Plain query-likelihood cannot reach those
documents; embedding expansion can.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import EmbeddingStore, write_vectors
from .textpipe import RawDocument, analyze

CONCEPTS = {
    "401": ("car repair", ["automobile", "vehicle", "mechanic", "garage"]),
    "402": ("ocean pollution", ["sea", "marine", "contamination", "toxic"]),
    "403": ("heart disease", ["cardiac", "coronary", "illness", "ailment"]),
    "404": ("stock market", ["shares", "equities", "exchange", "trading"]),
}

_SYLLABLES = ["ba", "ko", "ri", "tu", "me", "za", "no", "pi", "du", "ve", "lo", "xa", "fe", "gu", "ho"]


@dataclass
class SyntheticCollection:
    docs: list[RawDocument]
    topics_trec: str
    qrels: str
    vectors: EmbeddingStore

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": d / "corpus.jsonl",
            "topics": d / "topics.txt",
            "qrels": d / "qrels.txt",
            "vectors": d / "vectors.txt",
        }
        paths["corpus"].write_text(
            "".join(json.dumps({"doc_id": x.doc_id, "text": x.text}) + "\n" for x in self.docs)
        )
        paths["topics"].write_text(self.topics_trec)
        paths["qrels"].write_text(self.qrels)
        buf = io.StringIO()
        write_vectors(self.vectors, buf)
        paths["vectors"].write_text(buf.getvalue())
        return paths


def _filler_words(rng: np.random.Generator, n: int) -> list[str]:
    words: set[str] = set()
    while len(words) < n:
        words.add("".join(rng.choice(_SYLLABLES, size=3)) + "q")
    return sorted(words)


def make_collection(seed: int = 0, dim: int = 50, filler_docs: int = 20) -> SyntheticCollection:
    rng = np.random.default_rng(seed)
    filler = _filler_words(rng, 120)

    def fill(n: int) -> list[str]:
        return list(rng.choice(filler, size=n))

    docs: list[RawDocument] = []
    qrels: list[str] = []
    topics: list[str] = []
    for n, (qid, (title, synonyms)) in enumerate(CONCEPTS.items()):
        words = title.split()
        topics.append(f"<top>\n<num> Number: {qid}\n<title> {title}\n<desc> Description:\n{title}\n</top>\n")
        # topics differ in how many relevant docs avoid the query words
        for j in range(3 + n):
            text = list(rng.choice(synonyms, size=4)) + fill(8)
            rng.shuffle(text)
            doc_id = f"S{qid}-{j}"
            docs.append(RawDocument(doc_id, " ".join(text)))
            qrels.append(f"{qid} 0 {doc_id} 1")
        # one relevant document that does use the query words
        text = words + [synonyms[0]] + fill(8)
        docs.append(RawDocument(f"Q{qid}-0", " ".join(text)))
        qrels.append(f"{qid} 0 Q{qid}-0 1")
        # off-topic documents mentioning a single query word
        for j in range(3):
            text = [words[j % len(words)]] + fill(10)
            doc_id = f"N{qid}-{j}"
            docs.append(RawDocument(doc_id, " ".join(text)))
            qrels.append(f"{qid} 0 {doc_id} 0")
    for j in range(filler_docs):
        docs.append(RawDocument(f"F{j:03d}", " ".join(fill(12))))

    # embeddings over analyzed (stemmed) forms
    terms: list[str] = []
    vecs: list[np.ndarray] = []
    for qid, (title, synonyms) in CONCEPTS.items():
        base = rng.normal(size=dim)
        base /= np.linalg.norm(base)
        for w in title.split() + synonyms:
            for stem in analyze(w):
                if stem not in terms:
                    terms.append(stem)
                    vecs.append(base + 0.15 * rng.normal(size=dim) / np.sqrt(dim))
    for w in filler:
        for stem in analyze(w):
            if stem not in terms:
                terms.append(stem)
                vecs.append(rng.normal(size=dim))
    store = EmbeddingStore(terms, np.vstack(vecs))
    return SyntheticCollection(docs, "".join(topics), "\n".join(qrels) + "\n", store)
