import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqrad.core import (
    FunctionClass,
    GammaSet,
    G_operator,
    SymMatrix,
    envelope_bound,
    g_max,
    gamma_of,
    load_class,
)
from seqrad.errors import DimensionMismatch, MalformedSpec, NonFiniteEntry


def test_load_functions():
    fc = load_class({"functions": [[1, 0], [0, 1]]})
    assert isinstance(fc, FunctionClass)
    assert (fc.m, fc.z_count) == (2, 2)


def test_load_gamma_from_text():
    g = load_class('{"gamma": [[1, -1]], "label": "pair"}')
    assert isinstance(g, GammaSet)
    assert (g.m, g.size, g.label) == (2, 1, "pair")


@pytest.mark.parametrize(
    "doc",
    [
        {"functions": [[1, 0], [0]]},
        {"functions": [[1]], "gamma": [[1]]},
        {},
        {"functions": []},
        {"functions": [[1, "a"]]},
        {"gamma": [[True]]},
        {"functions": [[1]], "label": 3},
        "[1, 2]",
        "{not json",
    ],
)
def test_load_malformed(doc):
    with pytest.raises(MalformedSpec):
        load_class(doc)


@pytest.mark.parametrize("text", ['{"functions": [[NaN, 1]]}', '{"gamma": [[Infinity]]}'])
def test_load_nonfinite(text):
    with pytest.raises(NonFiniteEntry):
        load_class(text)


def test_load_gamma_dedups():
    g = load_class({"gamma": [[1, 2], [1, 2], [0, 0]]})
    assert g.size == 2


def test_gamma_of_columns():
    g = gamma_of(FunctionClass([[1, 0], [0, 1]]))
    np.testing.assert_array_equal(g.vectors, [[1, 0], [0, 1]])


def test_gamma_of_dedup():
    g = gamma_of(FunctionClass([[1, 1], [-1, -1]]))
    np.testing.assert_array_equal(g.vectors, [[1, -1]])


def test_gamma_of_scalar():
    g = gamma_of(FunctionClass([[2.5]]))
    assert g.m == 1 and g.vectors[0, 0] == 2.5


def test_gamma_rejects_duplicates():
    with pytest.raises(MalformedSpec):
        GammaSet([[1, 2], [1, 2]])


def test_instances_are_immutable():
    fc = FunctionClass([[1.0, 2.0]])
    with pytest.raises(ValueError):
        fc.values[0, 0] = 5.0


@pytest.mark.parametrize("x, expected", [((3, -1, 2), 3), ((7.5,), 7.5), ((0, 0), 0)])
def test_g_max(x, expected):
    assert g_max(x) == expected


def test_g_operator_examples():
    assert G_operator(np.eye(2), GammaSet([[1, 0], [0, 1]])) == 0.5
    assert G_operator(np.diag([1.0, -1.0]), GammaSet([[1, 1]])) == 0.0
    assert G_operator([[3.0]], GammaSet([[2.0]])) == pytest.approx(2.0**2 * 3.0 / 2)


def test_g_operator_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        G_operator(np.eye(3), GammaSet([[1, 0]]))


def test_symmatrix_upper_triangle_wins():
    S = SymMatrix([[1.0, 2.0], [99.0, 3.0]])
    np.testing.assert_array_equal(S.entries, [[1, 2], [2, 3]])


@pytest.mark.parametrize("vecs, b", [([[1, -1]], 1), ([[2, 0, 1]], 2), ([[0]], 0)])
def test_envelope_bound(vecs, b):
    assert envelope_bound(GammaSet(vecs)) == b


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def sym_and_gamma(draw, max_m=4):
    m = draw(st.integers(1, max_m))
    k = draw(st.integers(1, 4))
    A = np.array(draw(st.lists(finite, min_size=m * m, max_size=m * m))).reshape(m, m)
    vecs = np.array(draw(st.lists(finite, min_size=m * k, max_size=m * k))).reshape(k, m)
    return (A + A.T) / 2, GammaSet.from_vectors(vecs)


@settings(max_examples=100, deadline=None)
@given(sym_and_gamma(), st.floats(0, 5))
def test_g_operator_positively_homogeneous(sg, c):
    S, g = sg
    assert G_operator(c * S, g) == pytest.approx(c * G_operator(S, g), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(sym_and_gamma(), sym_and_gamma(), st.floats(0, 1))
def test_g_operator_convex(sg1, sg2, lam):
    S1, g = sg1
    S2, _ = sg2
    if S2.shape != S1.shape:
        S2 = np.eye(S1.shape[0])
    lhs = G_operator(lam * S1 + (1 - lam) * S2, g)
    rhs = lam * G_operator(S1, g) + (1 - lam) * G_operator(S2, g)
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))


@settings(max_examples=100, deadline=None)
@given(sym_and_gamma(), st.data())
def test_g_operator_monotone_under_psd_perturbation(sg, data):
    S, g = sg
    m = S.shape[0]
    B = np.array(data.draw(st.lists(finite, min_size=m * m, max_size=m * m))).reshape(m, m)
    assert G_operator(S, g) <= G_operator(S + B @ B.T, g) + 1e-9


@settings(max_examples=100, deadline=None)
@given(sym_and_gamma(), st.randoms())
def test_g_operator_permutation_invariant(sg, rnd):
    S, g = sg
    perm = list(range(S.shape[0]))
    rnd.shuffle(perm)
    gp = GammaSet(g.vectors[:, perm])
    assert G_operator(S[np.ix_(perm, perm)], gp) == pytest.approx(G_operator(S, g), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(sym_and_gamma())
def test_g_operator_zero_and_origin(sg):
    S, g = sg
    assert G_operator(np.zeros_like(S), g) == 0.0
    with_zero = GammaSet.from_vectors(np.vstack([g.vectors, np.zeros(g.m)]))
    assert G_operator(S, with_zero) == pytest.approx(max(G_operator(S, g), 0.0))


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=6), st.randoms())
def test_g_max_permutation(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert g_max(ys) == g_max(xs)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_gamma_of_size_and_dimension(m, k, data):
    vals = data.draw(st.lists(st.integers(-2, 2), min_size=m * k, max_size=m * k))
    fc = FunctionClass(np.array(vals, dtype=float).reshape(m, k))
    g = gamma_of(fc)
    assert g.m == m and g.size <= k
    assert envelope_bound(g) == fc.b
