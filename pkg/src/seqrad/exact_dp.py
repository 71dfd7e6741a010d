"""Exact finite-n sequential Rademacher complexity by backward induction.

The adversary picks ``gamma_t`` from a finite set as a function of the past
signs, so the value is computed on the tree of partial sums
``x_t = sum_{s<t} eps_s gamma_s``.  Identical partial sums are merged level by
level, which turns the ``(2k)^n`` game tree into a lattice walk whenever the
increments are commensurable.

Three memoization modes are supported:

* ``exact-integer``: increments are rescaled to integers and states are keyed
  by integer vectors.  Sound under any summation order.
* ``float-hash``: states are keyed by ``round(x * 2**40)``.  Used when the
  inputs cannot be put on a common denominator.
* ``none``: the full tree, for cross-checking on tiny instances.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import GammaSet, g_max
from .errors import ScaleOverflow, StateExplosion, TooLarge

logger = logging.getLogger(__name__)

MEMO_MODES = ("exact-integer", "float-hash", "none")
HARD_CAP_UNMEMOIZED = 24
FLOAT_QUANTUM = 2.0**-40
DEFAULT_NODE_BUDGET = 10**8
_KEY_LIMIT = 2**62


@dataclass(frozen=True)
class DPConfig:
    n: int
    memo_mode: str = "exact-integer"
    scale_denominator: int = 10**6
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.memo_mode not in MEMO_MODES:
            raise ValueError(f"memo_mode must be one of {MEMO_MODES}, got {self.memo_mode!r}")
        if not 1 <= self.scale_denominator <= 10**6:
            raise ValueError("scale_denominator must lie in [1, 10**6]")
        if self.node_budget < 1:
            raise ValueError("node_budget must be positive")


@dataclass(frozen=True)
class ValueSlice:
    """Values of a value function on a finite set of states."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.points) != len(self.values):
            raise ValueError("points and values must have the same length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("slice values must be finite")


@dataclass
class DPResult:
    value: float
    n: int
    mode: str
    scale: int | None
    level_sizes: list[int]
    evaluations: int
    fallback_reason: str | None = None
    # per level: (N_t, k, 2) indices into level t+1, and argmax gamma per state
    links: list[np.ndarray] = field(default_factory=list, repr=False)
    choices: list[np.ndarray] = field(default_factory=list, repr=False)
    states: list[np.ndarray] = field(default_factory=list, repr=False)


def integer_scale(gamma: GammaSet, max_denominator: int) -> int | None:
    """Smallest D <= max_denominator making every entry of D*gamma an integer.

    Entries must be exactly the double nearest to a rational with denominator
    at most ``max_denominator``; otherwise ``None``.
    """
    D = 1
    for x in gamma.vectors.ravel():
        fr = Fraction(float(x)).limit_denominator(max_denominator)
        if float(fr) != float(x):
            return None
        D = D * fr.denominator // math.gcd(D, fr.denominator)
        if D > max_denominator:
            return None
    return D


def backward_step(
    next_fn: Callable[[np.ndarray], float],
    x: Sequence[float],
    gamma: GammaSet,
    n: int,
) -> tuple[float, int]:
    """One round: ``max_gamma 0.5 * [next(x + gamma/sqrt n) + next(x - gamma/sqrt n)]``.

    Returns the value and the maximizing index (lowest index on ties).
    """
    x = np.asarray(x, dtype=float)
    r = math.sqrt(n)
    best, best_i = -math.inf, 0
    for i, gv in enumerate(gamma.vectors):
        val = 0.5 * (float(next_fn(x + gv / r)) + float(next_fn(x - gv / r)))
        if val > best:
            best, best_i = val, i
    return best, best_i


def _quantize(states: np.ndarray) -> np.ndarray:
    scaled = states / FLOAT_QUANTUM
    if scaled.size and np.max(np.abs(scaled)) >= _KEY_LIMIT:
        raise ScaleOverflow("float-hash keys exceed 63 bits; state magnitudes too large")
    return np.rint(scaled).astype(np.int64)


def _packed(keys: np.ndarray) -> np.ndarray:
    """Mixed-radix 1-d encoding of integer rows when it fits in 62 bits."""
    if keys.shape[0] == 0 or keys.shape[1] == 1:
        return keys.ravel()
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    if math.prod(int(s) for s in span) >= _KEY_LIMIT:
        return keys
    out = np.zeros(keys.shape[0], dtype=np.int64)
    for j in range(keys.shape[1]):
        out = out * int(span[j]) + (keys[:, j] - lo[j])
    return out


def _prepare(gamma: GammaSet, rounds: int, cfg: DPConfig) -> tuple[str, np.ndarray, int | None, str | None]:
    """Choose the keying mode and return (mode, increments, scale, fallback reason)."""
    if cfg.memo_mode == "none":
        if rounds > HARD_CAP_UNMEMOIZED:
            raise StateExplosion(f"unmemoized recursion is capped at n={HARD_CAP_UNMEMOIZED}")
        return "none", gamma.vectors.copy(), None, None
    if cfg.memo_mode == "exact-integer":
        D = integer_scale(gamma, cfg.scale_denominator)
        if D is not None:
            ints = np.rint(gamma.vectors * D)
            # states are bounded by rounds * max|increment|
            if rounds * float(np.max(np.abs(ints))) >= _KEY_LIMIT:
                raise ScaleOverflow(
                    f"integer state keys would exceed 63 bits (scale {D}, {rounds} rounds)"
                )
            return "exact-integer", ints.astype(np.int64), D, None
        reason = (
            f"entries are not rationals with denominator <= {cfg.scale_denominator}; "
            "keyed by floats quantized at 2^-40"
        )
        logger.warning("exact-integer keys unavailable: %s", reason)
        return "float-hash", gamma.vectors.copy(), None, reason
    return "float-hash", gamma.vectors.copy(), None, None


def _build_levels(
    incs: np.ndarray, rounds: int, mode: str, budget: int
) -> tuple[list[np.ndarray], list[np.ndarray], int]:
    k, m = incs.shape
    signs = np.array([1, -1], dtype=incs.dtype)
    states = [np.zeros((1, m), dtype=incs.dtype)]
    links: list[np.ndarray] = []
    evaluations = 0
    for _ in range(rounds):
        S = states[-1]
        N = S.shape[0]
        evaluations += 2 * k * N
        if evaluations > budget:
            raise StateExplosion(
                f"node budget {budget} exceeded at level {len(links) + 1} ({N} states)"
            )
        cand = (S[:, None, None, :] + signs[None, None, :, None] * incs[None, :, None, :]).reshape(-1, m)
        if mode == "none":
            nxt, inv = cand, np.arange(cand.shape[0])
        else:
            keys = _packed(cand if mode == "exact-integer" else _quantize(cand))
            _, first, inv = np.unique(keys, axis=0 if keys.ndim == 2 else None,
                                      return_index=True, return_inverse=True)
            nxt = cand[first]
        links.append(inv.reshape(N, k, 2))
        states.append(nxt)
    return states, links, evaluations


def _backward(leaf: np.ndarray, links: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
    V = leaf
    choices: list[np.ndarray] = []
    for lk in reversed(links):
        pair = V[lk]
        avg = 0.5 * (pair[..., 0] + pair[..., 1])
        choice = np.argmax(avg, axis=1)
        choices.append(choice)
        V = avg[np.arange(avg.shape[0]), choice]
    choices.reverse()
    return V, choices


def solve_dp(
    gamma: GammaSet,
    cfg: DPConfig,
    *,
    t: int = 1,
    x: Sequence[float] | None = None,
    keep_tree: bool = False,
) -> DPResult:
    """Evaluate ``W_t(x)`` of the n-round recursion (``W_{n+1} = g_max``).

    With the defaults this is ``W_1(0)``, the sequential Rademacher complexity.
    """
    n = cfg.n
    if not 1 <= t <= n + 1:
        raise ValueError(f"t must lie in [1, n+1], got {t}")
    rounds = n + 1 - t
    if cfg.memo_mode == "none" and rounds > 16 and gamma.size > 1:
        logger.warning("unmemoized tree with %d rounds and %d vectors is large", rounds, gamma.size)
    mode, incs, D, reason = _prepare(gamma, rounds, cfg)
    states, links, evals = _build_levels(incs, rounds, mode, cfg.node_budget)
    leaves = states[-1]
    root = math.sqrt(n)
    if x is None and mode == "exact-integer":
        # normalization deferred to a single division at the end
        leaf_vals = np.max(leaves, axis=1).astype(float)
        V, choices = _backward(leaf_vals, links)
        value = float(V[0]) / (D * root)
    else:
        scale = root * (D if mode == "exact-integer" else 1)
        offset = np.zeros(gamma.m) if x is None else np.asarray(x, dtype=float)
        leaf_vals = g_max(offset + leaves / scale)
        V, choices = _backward(np.asarray(leaf_vals, dtype=float), links)
        value = float(V[0])
    res = DPResult(
        value=value,
        n=n,
        mode=mode,
        scale=D,
        level_sizes=[s.shape[0] for s in states],
        evaluations=evals,
        fallback_reason=reason,
    )
    if keep_tree:
        res.links, res.choices, res.states = links, choices, states
    return res


def dp_value(gamma: GammaSet, cfg: DPConfig | int) -> float:
    """Exact ``R_n`` of the class with increment set ``gamma``."""
    if not isinstance(cfg, DPConfig):
        cfg = DPConfig(n=int(cfg))
    return solve_dp(gamma, cfg).value


def continuation_value(gamma: GammaSet, n: int, t: int, x: Sequence[float], **cfg_kw) -> float:
    """``W_t(x)``: value with ``n - t + 1`` rounds left from normalized state ``x``."""
    return solve_dp(gamma, DPConfig(n=n, **cfg_kw), t=t, x=x).value


def brute_force_value(gamma: GammaSet, n: int) -> float:
    """Maximize over every adapted assignment of gamma values to tree nodes.

    Node ``(t, prefix)`` carries the vector used at round ``t`` after the signs
    ``prefix``; all ``2^n`` sign paths are averaged for each assignment.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = gamma.size
    n_nodes = 2**n - 1
    if k**n_nodes > 10**6 or n > 3 and k > 1:
        raise TooLarge(f"{k}^{n_nodes} adapted assignments exceed the enumeration limit")
    paths = np.array(list(itertools.product((1.0, -1.0), repeat=n)))  # (P, n)
    # heap numbering: root 0, children of node j are 2j+1 (eps=+1) and 2j+2 (eps=-1)
    node_of = np.zeros((paths.shape[0], n), dtype=int)
    for p, signs in enumerate(paths):
        j = 0
        for s, e in enumerate(signs):
            node_of[p, s] = j
            j = 2 * j + (1 if e > 0 else 2)
    assign = np.array(list(itertools.product(range(k), repeat=n_nodes)), dtype=int)  # (A, nodes)
    chosen = gamma.vectors[assign[:, node_of]]  # (A, P, n, m)
    sums = np.einsum("pt,aptm->apm", paths, chosen) / math.sqrt(n)
    expected = np.max(sums, axis=-1).mean(axis=1)
    return float(np.max(expected))


@dataclass
class TableRow:
    n: int
    value: float | None
    delta: float | None
    status: str = "ok"
    reason: str | None = None


def convergence_table(
    gamma: GammaSet,
    schedule: Iterable[int],
    **cfg_kw,
) -> list[TableRow]:
    """Exact values along ``schedule`` with successive differences.

    A row whose computation fails is kept with ``status="skipped"``.
    """
    schedule = list(schedule)
    if schedule != sorted(schedule):
        raise ValueError("schedule must be sorted ascending")
    rows: list[TableRow] = []
    prev = None
    for n in schedule:
        try:
            v = dp_value(gamma, DPConfig(n=n, **cfg_kw))
        except (StateExplosion, ScaleOverflow) as exc:
            rows.append(TableRow(n, None, None, "skipped", f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(TableRow(n, v, None if prev is None else v - prev))
        prev = v
    return rows


def table_csv(rows: Sequence[TableRow]) -> str:
    lines = ["n,value,delta"]
    for r in rows:
        val = "" if r.value is None else repr(r.value)
        delta = "" if r.delta is None else repr(r.delta)
        lines.append(f"{r.n},{val},{delta}")
    return "\n".join(lines) + "\n"


def strategy_tree(gamma: GammaSet, cfg: DPConfig, max_n: int = 16) -> dict:
    """Chosen gamma index at every node of the sign tree, as nested dicts."""
    if cfg.n > max_n:
        raise TooLarge(f"strategy dumps are limited to n <= {max_n}")
    res = solve_dp(gamma, cfg, keep_tree=True)

    def node(level: int, idx: int) -> dict:
        c = int(res.choices[level][idx])
        out: dict = {"gamma": c}
        if level + 1 < len(res.choices):
            nxt = res.links[level][idx, c]
            out["+"] = node(level + 1, int(nxt[0]))
            out["-"] = node(level + 1, int(nxt[1]))
        return out

    return node(0, 0)
