"""Asymptotic i.i.d. Rademacher complexity: expected maximum of N(0, Sigma).

``Sigma = sum_j nu_j F(z_j) F(z_j)'`` for a probability vector ``nu`` on the
finite domain.  The expectation is estimated by Monte Carlo with a
counter-based generator: block ``b`` of the normal stream is drawn from
``Philox(SeedSequence([seed, b]))``, so the sample at a given index does not
depend on how the work is split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FunctionClass, SymMatrix
from .errors import LengthMismatch, NotPSD, TooFewSamples

BLOCK = 1 << 16
PSD_CLIP = 1e-8
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class Measure:
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("measure weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("measure weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"measure weights must sum to 1, got {w.sum()!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, k: int) -> "Measure":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def normalized(cls, w: Sequence[float]) -> "Measure":
        w = np.clip(np.asarray(w, dtype=float), 0.0, None)
        return cls(w / w.sum())


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    closed_form: float | None = None


def covariance(fc: FunctionClass, nu: Measure) -> SymMatrix:
    if nu.weights.size != fc.z_count:
        raise LengthMismatch(f"measure has {nu.weights.size} weights for {fc.z_count} points")
    V = fc.values
    return SymMatrix((V * nu.weights) @ V.T)


def _entries(S) -> np.ndarray:
    return S.entries if isinstance(S, SymMatrix) else SymMatrix(S).entries


def psd_factor(S) -> np.ndarray:
    """``A`` with ``A A' = Sigma`` from a clipped eigendecomposition.

    Sigma is first divided by a power of two (exact), and each eigenvector is
    oriented so that its largest entry is positive, which makes the factor a
    deterministic function of Sigma.
    """
    M = _entries(S)
    top = float(np.max(np.abs(np.diag(M)))) if M.size else 0.0
    s = 2.0 ** math.frexp(top)[1] if top > 0 else 1.0
    lam, vec = np.linalg.eigh(M / s)
    lam = lam * s
    if lam.min() < -PSD_CLIP:
        raise NotPSD(f"smallest eigenvalue {lam.min():.3e} is below -{PSD_CLIP}")
    lam = np.clip(lam, 0.0, None)
    pivot = np.argmax(np.abs(vec), axis=0)
    signs = np.sign(vec[pivot, np.arange(vec.shape[1])])
    signs[signs == 0] = 1.0
    return (vec * signs) * np.sqrt(lam)


def _normal_block(seed: int, block: int, count: int, m: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    return gen.standard_normal((count, m))


def emax_gaussian_mc(S, samples: int, seed: int) -> MCEstimate:
    """Monte Carlo estimate of ``E max_i Y_i`` with ``Y ~ N(0, Sigma)``."""
    if samples < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    A = psd_factor(S)
    m = A.shape[0]
    n_blocks = -(-samples // BLOCK)
    sums = np.empty(n_blocks)
    sqs = np.empty(n_blocks)
    for b in range(n_blocks):
        count = min(BLOCK, samples - b * BLOCK)
        y = np.max(_normal_block(seed, b, count, m) @ A.T, axis=1)
        sums[b] = y.sum()
        sqs[b] = np.dot(y, y)
    total, total_sq = float(np.sum(sums)), float(np.sum(sqs))
    mean = total / samples
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return MCEstimate(mean, math.sqrt(var / samples), samples, seed)


def emax_gaussian_closed2(S) -> float:
    """``E max(Y1, Y2) = sqrt(Var(Y1 - Y2) / (2 pi))`` for a centered pair."""
    M = _entries(S)
    if M.shape != (2, 2):
        raise ValueError("closed form needs a 2x2 covariance")
    if np.linalg.eigvalsh(M).min() < -PSD_CLIP:
        raise NotPSD("covariance is not positive semidefinite")
    var = M[0, 0] + M[1, 1] - 2.0 * M[0, 1]
    return math.sqrt(max(var, 0.0) / (2.0 * math.pi))


def iid_asymptotic(fc: FunctionClass, nu: Measure, samples: int = 100_000, seed: int = 42) -> MCEstimate:
    S = covariance(fc, nu)
    est = emax_gaussian_mc(S, samples, seed)
    if fc.m == 2:
        est = MCEstimate(est.mean, est.stderr, est.samples, est.seed, emax_gaussian_closed2(S))
    return est
