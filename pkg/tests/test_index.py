import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_index
from embqe.index import IndexFormatError, build_index, load, save
from embqe.lm import mle_query_model, score_document
from embqe.textpipe import AnalyzedDocument

corpora = st.lists(
    st.lists(st.sampled_from([f"t{i}" for i in range(50)]), min_size=0, max_size=30),
    min_size=0,
    max_size=200,
)


def test_single_doc_stats():
    idx = make_index(["a", "b", "a"])
    s = idx.stats("a")
    assert (s.cf, s.df) == (2, 1)
    assert idx.doc_length(0) == 3 and idx.total_tokens == 3


def test_empty_corpus():
    idx = build_index([])
    assert idx.num_docs == 0 and idx.vocabulary_size == 0
    with pytest.raises(ValueError):
        idx.p_coll("a")


def test_shared_term_postings_sorted():
    idx = make_index(["x", "a"], ["a", "a", "y"])
    docs, tfs = idx.postings("a")
    assert idx.stats("a").df == 2
    assert docs.tolist() == [0, 1] and tfs.tolist() == [1, 2]


def test_duplicate_doc_id():
    with pytest.raises(ValueError, match="dup"):
        build_index([AnalyzedDocument("dup", ("a",)), AnalyzedDocument("dup", ("b",))])


def test_p_ml(toy_index):
    assert toy_index.p_ml("a", 0) == pytest.approx(2 / 3)
    assert toy_index.p_ml("c", 0) == 0.0
    assert toy_index.p_ml("zzz", 0) == 0.0
    assert make_index(["a"]).p_ml("a", 0) == 1.0
    with pytest.raises(IndexError):
        toy_index.p_ml("a", 3)


def test_p_coll(toy_index):
    assert toy_index.total_tokens == 10
    assert toy_index.p_coll("a") == 0.4
    assert toy_index.p_coll("oov") == 0.0
    assert math.fsum(toy_index.p_coll(t) for t in toy_index.terms) == pytest.approx(1.0, abs=1e-12)


@given(corpora)
def test_collection_invariants(corpus):
    idx = make_index(*corpus)
    assert int(idx.cf.sum()) == idx.total_tokens == sum(len(d) for d in corpus)
    for t in idx.terms:
        docs, tfs = idx.postings(t)
        assert np.all(np.diff(docs.astype(np.int64)) > 0)
        assert int(tfs.sum()) == idx.stats(t).cf
        assert idx.stats(t).df == sum(1 for d in corpus if t in d)
    for i, d in enumerate(corpus):
        assert idx.doc_tokens(i) == d
        assert sum(idx.tf(t, i) for t in set(d)) == idx.doc_length(i)
    if idx.total_tokens:
        assert math.fsum(idx.p_coll(t) for t in idx.terms) == pytest.approx(1.0, abs=1e-12)


def test_roundtrip(tmp_path, toy_index):
    path = tmp_path / "x.idx"
    save(toy_index, path)
    back = load(path)
    assert back == toy_index
    assert back.doc_ids == ["d1", "d2", "d3"]
    assert back.stats("a") == toy_index.stats("a")


@given(corpora.filter(lambda c: any(c)))
def test_roundtrip_preserves_scores_bitwise(corpus):
    import tempfile, os

    idx = make_index(*corpus)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "i.idx")
        save(idx, path)
        back = load(path)
    qm = mle_query_model(sorted({t for doc in corpus for t in doc})[:3])
    for i in range(idx.num_docs):
        if idx.doc_length(i):
            assert score_document(back, i, qm) == score_document(idx, i, qm)


def test_empty_roundtrip(tmp_path):
    save(build_index([]), tmp_path / "e.idx")
    assert load(tmp_path / "e.idx").num_docs == 0


def test_truncated_file(tmp_path, toy_index):
    path = tmp_path / "x.idx"
    save(toy_index, path)
    data = path.read_bytes()
    for cut in (10, 30, len(data) - 3):
        path.write_bytes(data[:cut])
        with pytest.raises(IndexFormatError):
            load(path)


def test_truncated_file_names_field(tmp_path, toy_index):
    path = tmp_path / "x.idx"
    save(toy_index, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(IndexFormatError, match="token_ids"):
        load(path)


def test_bad_magic_and_version(tmp_path, toy_index):
    path = tmp_path / "x.idx"
    save(toy_index, path)
    data = path.read_bytes()
    path.write_bytes(b"NOTANIDX" + data[8:])
    with pytest.raises(IndexFormatError, match="magic"):
        load(path)
    path.write_bytes(data[:8] + (99).to_bytes(4, "little") + data[12:])
    with pytest.raises(IndexFormatError, match="version"):
        load(path)
