import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqrad.bounds import (
    HEAT_UPPER_GATED,
    a_of_class,
    heat_upper,
    pair_costs,
    simplex_lp,
    theorem3_sandwich,
)
from seqrad.core import FunctionClass
from seqrad.errors import NeedTwoFunctions

from oracles import simplex_grid_max


def test_lp_single_pair():
    t, nu = simplex_lp([[4, 0]])
    assert t == 4.0
    np.testing.assert_allclose(nu.weights, [1, 0])


def test_lp_three_pairs():
    C = [[4, 0], [0, 4], [4, 4]]
    t, nu = simplex_lp(C)
    assert t == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(nu.weights, [0.5, 0.5], atol=1e-12)
    assert simplex_grid_max(C, 1e-4) == pytest.approx(2.0, abs=1e-3)


def test_lp_zero_costs():
    t, nu = simplex_lp([[0, 0, 0]])
    assert t == 0.0 and nu.weights.sum() == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.data())
def test_lp_matches_grid_search(P, k, data):
    C = np.array(data.draw(st.lists(st.integers(0, 16), min_size=P * k, max_size=P * k)), dtype=float)
    C = C.reshape(P, k) / 4
    t, nu = simplex_lp(C)
    assert np.all(C @ nu.weights >= t - 1e-9)
    assert t == pytest.approx(simplex_grid_max(C, 1e-3), abs=1e-3 * max(1.0, C.max()))
    assert t >= simplex_grid_max(C, 1e-3) - 1e-9


def test_a_of_class_examples():
    assert a_of_class(FunctionClass([[1], [-1]]))[0] == 2.0
    assert a_of_class(FunctionClass([[1, 0], [0, 1]]))[0] == pytest.approx(1.0)
    a, nu = a_of_class(FunctionClass([[1, 1], [-1, 1], [1, -1]]))
    assert a == pytest.approx(math.sqrt(2), abs=1e-12)
    np.testing.assert_allclose(nu.weights, [0.5, 0.5], atol=1e-12)
    with pytest.raises(NeedTwoFunctions):
        a_of_class(FunctionClass([[1, 2, 3]]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(1, 4), st.data(), st.floats(-3, 3), st.floats(0.1, 5))
def test_a_invariances(m, k, data, shift, scale):
    vals = np.array(data.draw(st.lists(st.integers(-4, 4), min_size=m * k, max_size=m * k)), dtype=float)
    fc = FunctionClass(vals.reshape(m, k) / 4)
    a = a_of_class(fc)[0]
    assert a_of_class(FunctionClass(fc.values + shift))[0] == pytest.approx(a, abs=1e-9)
    assert a_of_class(FunctionClass(fc.values * scale))[0] == pytest.approx(scale * a, rel=1e-9, abs=1e-9)


def test_pair_costs_layout():
    C = pair_costs(FunctionClass([[1, 0], [0, 1], [1, 1]]))
    np.testing.assert_array_equal(C, [[1, 1], [0, 1], [1, 0]])


def test_heat_upper_examples():
    assert heat_upper(1, 3.0) == 0.0
    assert heat_upper(2, 1.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    assert heat_upper(3, 1.0) == pytest.approx(1.5 / math.sqrt(math.pi), abs=1e-10)
    assert heat_upper(3, 2.0) == pytest.approx(2 * heat_upper(3, 1.0))


def test_heat_upper_chain():
    prev = 0.0
    for m in range(1, 65):
        val = heat_upper(m, 1.0)
        cap = math.sqrt(2 * math.log(m))
        assert val <= cap
        if m >= 2:
            assert val < cap
        assert val >= prev
        prev = val


def test_sandwich_pair_class():
    rep = theorem3_sandwich(FunctionClass([[1, 1], [-1, -1]]), math.sqrt(2 / math.pi))
    assert rep.lower == pytest.approx(2 * math.sqrt(math.log(2)) / 17, abs=1e-12)
    assert rep.upper_logm == pytest.approx(math.sqrt(2 * math.log(2)), abs=1e-12)
    assert rep.upper_heat == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    # the unscaled heat value is below the true value; it must not gate
    assert rep.upper_heat < rep.estimate
    assert rep.verdict == "PASS" and rep.heat_gated is HEAT_UPPER_GATED is False
    assert rep.upper_heat_rescaled == pytest.approx(math.sqrt(2 / math.pi), abs=1e-10)


def test_sandwich_identity_class():
    rep = theorem3_sandwich(FunctionClass([[1, 0], [0, 1]]), 1 / math.sqrt(2 * math.pi))
    assert rep.lower == pytest.approx(math.sqrt(math.log(2)) / 17, abs=1e-12)
    assert rep.verdict == "PASS"


def test_sandwich_fail_and_errors():
    assert theorem3_sandwich(FunctionClass([[1, 0], [0, 1]]), 5.0).verdict == "FAIL"
    with pytest.raises(NeedTwoFunctions):
        theorem3_sandwich(FunctionClass([[1, -1]]), 0.0)
