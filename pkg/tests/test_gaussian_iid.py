import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqrad.core import FunctionClass
from seqrad.errors import LengthMismatch, NotPSD, TooFewSamples
from seqrad.gaussian_iid import (
    BLOCK,
    Measure,
    _normal_block,
    covariance,
    emax_gaussian_closed2,
    emax_gaussian_mc,
    iid_asymptotic,
    psd_factor,
)

SQRT_2_OVER_PI = math.sqrt(2 / math.pi)


def test_measure_validation():
    with pytest.raises(ValueError):
        Measure([0.5, 0.6])
    with pytest.raises(ValueError):
        Measure([1.5, -0.5])
    assert Measure.uniform(4).weights.sum() == 1.0


def test_covariance_examples():
    np.testing.assert_allclose(covariance(FunctionClass([[1, 0], [0, 1]]), Measure([0.5, 0.5])).entries,
                               np.diag([0.5, 0.5]))
    np.testing.assert_allclose(covariance(FunctionClass([[3.0, 3.0]]), Measure([0.2, 0.8])).entries, [[9.0]])
    np.testing.assert_allclose(covariance(FunctionClass([[1, 1], [-1, -1]]), Measure([0.3, 0.7])).entries,
                               [[1, -1], [-1, 1]])


def test_covariance_length_mismatch():
    with pytest.raises(LengthMismatch):
        covariance(FunctionClass([[1, 0]]), Measure([1.0]))


@pytest.mark.parametrize(
    "S, expected",
    [
        ([[1, 1], [1, 1]], 0.0),
        (np.eye(2), 1 / math.sqrt(math.pi)),
        ([[1, -1], [-1, 1]], SQRT_2_OVER_PI),
    ],
)
def test_mc_against_closed_forms(S, expected):
    est = emax_gaussian_mc(S, 100_000, 7)
    assert abs(est.mean - expected) <= 4 * est.stderr + 1e-15
    assert emax_gaussian_closed2(S) == pytest.approx(expected, abs=1e-15)


def test_mc_errors():
    with pytest.raises(NotPSD):
        emax_gaussian_mc([[1, 0], [0, -1e-3]], 10_000, 1)
    with pytest.raises(NotPSD):
        emax_gaussian_closed2([[1, 2], [2, 1]])
    with pytest.raises(TooFewSamples):
        emax_gaussian_mc(np.eye(2), 999, 1)


def test_tiny_negative_eigenvalues_are_clipped():
    S = np.array([[1.0, 1.0], [1.0, 1.0]]) - 5e-9 * np.eye(2)
    A = psd_factor(S)
    np.testing.assert_allclose(A @ A.T, [[1, 1], [1, 1]], atol=1e-8)


def test_iid_examples():
    e1 = iid_asymptotic(FunctionClass([[1, 1], [-1, -1]]), Measure([0.5, 0.5]))
    assert abs(e1.mean - SQRT_2_OVER_PI) <= 4 * e1.stderr
    assert e1.closed_form == pytest.approx(SQRT_2_OVER_PI)
    e2 = iid_asymptotic(FunctionClass([[1, 0], [0, 1]]), Measure([0.5, 0.5]))
    target = (1 / math.sqrt(2)) / math.sqrt(math.pi)
    assert abs(e2.mean - target) <= 4 * e2.stderr
    e3 = iid_asymptotic(FunctionClass([[0.5, -1.0]]), Measure([0.5, 0.5]))
    assert abs(e3.mean) <= 4 * e3.stderr and e3.closed_form is None


def test_stream_depends_only_on_seed_and_index():
    head = _normal_block(11, 0, 100, 3)
    np.testing.assert_array_equal(head, _normal_block(11, 0, BLOCK, 3)[:100])
    total = BLOCK + 1000
    y = np.concatenate([_normal_block(11, 0, BLOCK, 3), _normal_block(11, 1, 1000, 3)]).max(axis=1)
    est = emax_gaussian_mc(np.eye(3), total, 11)
    assert est.mean == pytest.approx(y.mean(), rel=1e-13)
    assert est.stderr == pytest.approx(y.std(ddof=1) / math.sqrt(total), rel=1e-9)


def random_psd(rng, m):
    B = rng.normal(size=(m, m))
    if rng.random() < 0.3:
        B[:, -1] = 0.0  # singular
    return B @ B.T


def test_mc_vs_closed_form_200_matrices():
    rng = np.random.default_rng(3)
    hits = 0
    for i in range(200):
        S = random_psd(rng, 2)
        est = emax_gaussian_mc(S, 100_000, 1000 + i)
        hits += abs(est.mean - emax_gaussian_closed2(S)) <= 4 * est.stderr
    assert hits >= 198


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(0, 2**63))
def test_determinism(m, mseed, seed):
    S = random_psd(np.random.default_rng(mseed), m)
    assert emax_gaussian_mc(S, 1000, seed) == emax_gaussian_mc(S, 1000, seed)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_scale_equivariance(m, mseed, c):
    S = random_psd(np.random.default_rng(mseed), m)
    base = emax_gaussian_mc(S, 1000, 5)
    scaled = emax_gaussian_mc(c * c * S, 1000, 5)
    assert scaled.mean == pytest.approx(c * base.mean, rel=1e-9, abs=1e-9 * c * (abs(base.mean) + base.stderr))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.sampled_from([2.0, 4.0, 0.5]))
def test_scale_equivariance_exact_for_powers_of_two(m, mseed, c):
    S = random_psd(np.random.default_rng(mseed), m)
    assert emax_gaussian_mc(c * c * S, 1000, 5).mean == c * emax_gaussian_mc(S, 1000, 5).mean
