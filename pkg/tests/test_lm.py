import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import make_index
from embqe.textpipe import AnalyzedDocument
from embqe.index import build_index
from embqe.lm import QueryModel, format_run, mle_query_model, retrieve, score_document


def test_mle_query_model():
    assert mle_query_model(["a", "b"]).weights == {"a": 0.5, "b": 0.5}
    qm = mle_query_model(["a", "a", "b"])
    assert qm["a"] == pytest.approx(2 / 3) and qm["b"] == pytest.approx(1 / 3)
    assert mle_query_model(["a"]).weights == {"a": 1.0}
    with pytest.raises(ValueError):
        mle_query_model([])


def test_query_model_validation():
    with pytest.raises(ValueError):
        QueryModel({"a": 0.5})
    with pytest.raises(ValueError):
        QueryModel({"a": 1.0, "b": 0.0})
    assert QueryModel.normalized({"a": 2, "b": 2, "c": 0}).weights == {"a": 0.5, "b": 0.5}


def test_jm_worked_example(toy_index):
    # doc d1 = [a, a, b], p_coll(a) = 0.4
    s = score_document(toy_index, 0, QueryModel({"a": 1.0}), 0.6)
    assert s == pytest.approx(math.log(0.4 * (2 / 3) + 0.6 * 0.4), abs=1e-9)
    assert s == pytest.approx(math.log(0.50667), abs=1e-5)


def test_absent_term_uses_collection_only():
    # t occurs once in a 10-token collection, not in doc 0
    idx = make_index(["a"] * 5, ["b"] * 4 + ["t"])
    assert idx.p_coll("t") == 0.1
    s = score_document(idx, 0, QueryModel({"t": 1.0}), 0.6)
    assert s == pytest.approx(math.log(0.06), abs=1e-9)


def test_oov_terms_skipped(toy_index):
    assert score_document(toy_index, 0, QueryModel({"zzz": 1.0})) == 0.0
    both = score_document(toy_index, 0, QueryModel({"a": 0.5, "zzz": 0.5}))
    assert both == pytest.approx(0.5 * score_document(toy_index, 0, QueryModel({"a": 1.0})))
    assert retrieve(toy_index, QueryModel({"zzz": 1.0})).entries == []


def test_lambda_range(toy_index):
    for lam in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            score_document(toy_index, 0, QueryModel({"a": 1.0}), lam)


def test_one_doc_corpus():
    idx = make_index(["x", "y"])
    run = retrieve(idx, mle_query_model(["x"]), query_id="q")
    assert run.doc_ids == ["d1"]


def test_identical_docs_tie_break_by_doc_id():
    idx = build_index([AnalyzedDocument("zeta", ("a", "b")), AnalyzedDocument("alpha", ("a", "b"))])
    run = retrieve(idx, mle_query_model(["a"]))
    assert run.doc_ids == ["alpha", "zeta"]
    assert run.entries[0][1] == run.entries[1][1]


def test_k_truncates_and_keeps_ties_deterministic():
    idx = make_index(*([["a", "b"]] * 6), ["a", "a"])
    run = retrieve(idx, mle_query_model(["a"]), k=3)
    assert run.doc_ids == ["d7", "d1", "d2"]
    with pytest.raises(ValueError):
        retrieve(idx, mle_query_model(["a"]), k=0)


docs_st = st.lists(
    st.lists(st.sampled_from("abcdefghij"), min_size=1, max_size=15), min_size=1, max_size=100
)
query_st = st.dictionaries(st.sampled_from("abcdefghijxyz"), st.floats(0.01, 1.0), min_size=1, max_size=5)


@given(docs_st, query_st, st.floats(0.05, 0.95))
def test_retrieve_equals_exhaustive_scoring(docs, raw_q, lam):
    idx = make_index(*docs)
    qm = QueryModel.normalized(raw_q)
    expected = oracles.jm_scores({f"d{i}": d for i, d in enumerate(docs, 1)}, qm.weights, lam)
    run = retrieve(idx, qm, lam, k=1000)
    want = sorted(expected.items(), key=lambda kv: (-kv[1], kv[0]))
    assert run.entries == want


@given(docs_st, st.sampled_from("abcde"), st.floats(0.05, 0.95))
def test_single_term_ranks_follow_p_ml(docs, term, lam):
    idx = make_index(*docs)
    run = retrieve(idx, QueryModel({term: 1.0}), lam)
    pml = [idx.p_ml(term, idx.doc_ordinals[d]) for d in run.doc_ids]
    assert all(a >= b for a, b in zip(pml, pml[1:]))


@given(docs_st, query_st, st.floats(0.1, 10.0))
def test_scaling_query_weights_scales_scores(docs, raw_q, c):
    idx = make_index(*docs)
    qm = QueryModel.normalized(raw_q)
    scaled = QueryModel.__new__(QueryModel)
    scaled.weights = {t: c * w for t, w in qm.items()}
    base = retrieve(idx, qm)
    big = retrieve(idx, scaled)
    for (d1, s1), (d2, s2) in zip(base.entries, big.entries):
        assert s2 == pytest.approx(c * s1, rel=1e-9, abs=1e-12)
    assert sorted(base.doc_ids) == sorted(big.doc_ids)
    # ranking unchanged apart from near-ties that rescaling may reorder
    scores = dict(base.entries)
    for a, b in zip(big.doc_ids, big.doc_ids[1:]):
        assert scores[a] >= scores[b] - 1e-9


def test_run_format(toy_index):
    run = retrieve(toy_index, mle_query_model(["a"]), query_id="301")
    lines = format_run([run], "tag").splitlines()
    assert lines[0].split()[:4] == ["301", "Q0", run.doc_ids[0], "1"]
    assert float(lines[0].split()[4]) == run.entries[0][1]
    assert all(len(l.split()) == 6 for l in lines)
