"""Feedback-policy simulation of the stochastic-control representation.

All coordinates share one scalar Brownian motion: ``dX = gamma(t, X) dW`` with
``gamma`` drawn from the finite set.  Any policy gives an estimate from below
of the value; the greedy policy read off retained solver slices should come
close to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GammaSet, g_max
from .errors import BadPolicy, SlicesMissing
from .gaussian_iid import MIN_SAMPLES, MCEstimate
from .gheat import Grid, GridSlice, SolveResult, interpolate


class Policy:
    """Maps ``(t, states)`` to a vector of gamma indices."""

    kind: str = ""

    def choose(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def max_index(self) -> int:
        raise NotImplementedError

    def validate(self, gamma: GammaSet) -> None:
        top = self.max_index()
        if top >= gamma.size or self.min_index() < 0:
            raise BadPolicy(f"policy refers to gamma index {top} but the set has {gamma.size} vectors")

    def min_index(self) -> int:
        return 0


@dataclass
class ConstantPolicy(Policy):
    index: int
    kind: str = field(default="constant", init=False)

    def choose(self, t, X):
        return np.full(X.shape[0], self.index, dtype=np.intp)

    def max_index(self):
        return self.index

    def min_index(self):
        return self.index


@dataclass
class TablePolicy(Policy):
    """Piecewise-constant choices on a time partition and a state lattice.

    ``table[j]`` holds the indices on the nodes of ``lattice`` for
    ``t in [j/T, (j+1)/T)``; states are mapped to the nearest node (clamped).
    """

    table: np.ndarray
    lattice: Grid
    kind: str = field(default="table", init=False)

    def choose(self, t, X):
        T = self.table.shape[0]
        j = min(int(t * T + 1e-12), T - 1)
        g = self.lattice
        idx = np.clip(np.rint(X / g.h).astype(np.intp) + g.half_nodes, 0, g.nodes_per_axis - 1)
        return self.table[j][tuple(idx.T)].astype(np.intp)

    def max_index(self):
        return int(self.table.max())

    def min_index(self):
        return int(self.table.min())


@dataclass
class GreedyPolicy(Policy):
    """Argmax of the two-point average of the next retained slice."""

    slices: list[GridSlice]
    gamma: GammaSet
    kind: str = field(default="greedy", init=False)

    def choose(self, t, X):
        levels = len(self.slices) - 1
        dt = 1.0 / levels
        j = min(int(t / dt + 1e-9), levels - 1)
        nxt = self.slices[j + 1]
        root = math.sqrt(dt)
        best = np.full(X.shape[0], -np.inf)
        out = np.zeros(X.shape[0], dtype=np.intp)
        for i, gv in enumerate(self.gamma.vectors):
            d = gv * root
            avg = 0.5 * (interpolate(nxt, X + d) + interpolate(nxt, X - d))
            better = avg > best
            out[better] = i
            best = np.where(better, avg, best)
        return out

    def max_index(self):
        return self.gamma.size - 1


def greedy_policy_from_solution(sr: SolveResult, gamma: GammaSet) -> Policy:
    if sr.slices is None:
        raise SlicesMissing("solve with retain_slices=True to build a greedy policy")
    if gamma.size == 1:
        return ConstantPolicy(0)
    return GreedyPolicy(sr.slices, gamma)


def random_table_policy(gamma: GammaSet, rng: np.random.Generator, time_levels: int = 8,
                        h: float = 0.25, half_nodes: int = 8) -> TablePolicy:
    lattice = Grid(m=gamma.m, L=h * half_nodes, h=h, half_nodes=half_nodes, dt=1.0 / time_levels,
                   t_steps=time_levels)
    table = rng.integers(0, gamma.size, size=(time_levels,) + lattice.node_counts)
    return TablePolicy(table, lattice)


def simulate_policy(gamma: GammaSet, policy: Policy, steps: int = 256, paths: int = 100_000,
                    seed: int = 42) -> MCEstimate:
    """Monte Carlo value of ``E max_i X_1^i`` under ``policy``, started at 0."""
    if steps < 1:
        raise ValueError("steps must be positive")
    if paths < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} paths")
    policy.validate(gamma)
    X = np.zeros((paths, gamma.m))
    dt = 1.0 / steps
    root = math.sqrt(dt)
    for k in range(steps):
        idx = policy.choose(k * dt, X)
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))
        dW = gen.standard_normal(paths) * root
        X += gamma.vectors[idx] * dW[:, None]
    y = g_max(X)
    return MCEstimate(float(y.mean()), float(y.std(ddof=1) / math.sqrt(paths)), paths, seed)
