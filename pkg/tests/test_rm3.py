import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_index
from embqe.lm import QueryModel, mle_query_model
from embqe.rm3 import RelevanceModel, estimate_rm1, rm3_expand


def _smoothed(docs, doc, term, lam):
    total = sum(len(d) for d in docs)
    cf = sum(d.count(term) for d in docs)
    return (1 - lam) * doc.count(term) / len(doc) + lam * cf / total


def test_single_feedback_doc_is_its_smoothed_model():
    docs = [["a", "a", "b", "c"], ["b", "d"], ["c", "e", "e"]]
    idx = make_index(*docs)
    rm1 = estimate_rm1(idx, mle_query_model(["a"]), 0.6, fb_docs=1)
    top = docs[0]
    vocab = sorted(set(top))
    raw = {t: _smoothed(docs, top, t, 0.6) for t in vocab}
    z = sum(raw.values())
    assert rm1.weights == pytest.approx({t: v / z for t, v in raw.items()}, abs=1e-12)


def test_three_doc_hand_sum():
    docs = [["a", "b"], ["a", "c", "c"], ["d", "d"]]
    idx = make_index(*docs)
    lam = 0.5
    rm1 = estimate_rm1(idx, mle_query_model(["a", "c"]), lam, fb_docs=3)
    # feedback docs are d1 and d2 (d3 matches no query term)
    fb = docs[:2]
    vocab = sorted({t for d in fb for t in d})
    ql = [math.prod(_smoothed(docs, d, q, lam) for q in ("a", "c")) for d in fb]
    raw = {w: sum(_smoothed(docs, d, w, lam) * w_d for d, w_d in zip(fb, ql)) for w in vocab}
    z = sum(raw.values())
    assert rm1.weights == pytest.approx({w: v / z for w, v in raw.items()}, abs=1e-12)


def test_duplicate_feedback_doc_adds_nothing():
    idx = make_index(["a", "b", "b"], ["a", "b", "b"], ["c", "d"])
    one = estimate_rm1(idx, mle_query_model(["a"]), 0.6, 1)
    two = estimate_rm1(idx, mle_query_model(["a"]), 0.6, 2)
    assert set(one.weights) == {"a", "b"}
    assert two.weights == pytest.approx(one.weights, abs=1e-12)


def test_no_retrievable_documents():
    with pytest.raises(ValueError):
        estimate_rm1(make_index(["a"]), QueryModel({"zz": 1.0}), 0.6, 3)
    with pytest.raises(ValueError):
        estimate_rm1(make_index(["a"]), QueryModel({"a": 1.0}), 0.6, 0)


docs_st = st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=10), min_size=2, max_size=30)


@given(docs_st, st.permutations(range(30)))
def test_rm1_invariant_to_document_order(docs, perm):
    order = [p for p in perm if p < len(docs)]
    if not any("a" in d or "b" in d for d in docs):
        return
    a = estimate_rm1(make_index(*docs), mle_query_model(["a", "b"]), 0.6, 5)
    shuffled = [docs[i] for i in order]
    b = estimate_rm1(make_index(*shuffled), mle_query_model(["a", "b"]), 0.6, len(docs))
    c = estimate_rm1(make_index(*docs), mle_query_model(["a", "b"]), 0.6, len(docs))
    assert b.weights == pytest.approx(c.weights, abs=1e-12)
    assert abs(sum(a.weights.values()) - 1) <= 1e-9


def test_rm3_mix_extremes_and_hand_mixture():
    rm1 = RelevanceModel({"a": 0.5, "c": 0.3, "d": 0.2})
    qm = mle_query_model(["a", "b"])
    assert rm3_expand(rm1, qm, 2, mix=1.0) == qm
    zero = rm3_expand(rm1, qm, 2, mix=0.0)
    assert zero.weights == pytest.approx({"a": 0.625, "c": 0.375})
    half = rm3_expand(rm1, qm, 2, mix=0.5)
    assert half.weights == pytest.approx({"a": 0.25 + 0.3125, "b": 0.25, "c": 0.1875})
    assert sum(half.weights.values()) == pytest.approx(1.0, abs=1e-12)


def test_rm3_truncation_tie_break():
    rm1 = RelevanceModel({"x": 0.25, "b": 0.25, "a": 0.25, "z": 0.25})
    assert [t for t, _ in rm1.top(2)] == ["a", "b"]


@given(
    st.dictionaries(st.sampled_from("abcdefghij"), st.floats(0.001, 1), min_size=1),
    st.integers(1, 12),
    st.floats(0, 1),
)
def test_rm3_properties(raw, n_terms, mix):
    z = sum(raw.values())
    rm1 = RelevanceModel({t: v / z for t, v in raw.items()})
    qm = mle_query_model(["a", "q"])
    out = rm3_expand(rm1, qm, n_terms, mix)
    assert abs(sum(out.weights.values()) - 1) <= 1e-9
    assert len(rm1.top(n_terms)) == min(n_terms, len(raw))
    if mix == 0:
        assert len(out) == min(n_terms, len(raw))
