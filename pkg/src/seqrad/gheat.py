"""Monotone semi-Lagrangian scheme for the G-heat terminal-value problem.

Solves ``-v_t - 0.5 * max_gamma gamma' v_xx gamma = 0`` on ``[0, 1] x R^m``
with ``v(1, x) = max_i x_i`` by stepping backward with

    v(t, x) = max_gamma 0.5 * [v(t+dt, x + gamma sqrt(dt)) + v(t+dt, x - gamma sqrt(dt))]

on a uniform lattice.  Off-node reads use multilinear interpolation; reads
outside ``[-L, L]^m`` extrapolate linearly from the outermost two planes,
because the solution grows linearly at infinity.

Every node is displaced by the same vector ``gamma sqrt(dt)``, so the
interpolation weights are the same for all nodes and the tensor-product
interpolation factors into one 1-d pass per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import GammaSet, envelope_bound, g_max
from .errors import BudgetExceeded, DimensionMismatch, DimensionTooHigh
from .exact_dp import ValueSlice

MAX_DIM = 4
DEFAULT_NODE_BUDGET = 2 * 10**7
_SNAP = 1e-9


@dataclass(frozen=True)
class Grid:
    m: int
    L: float
    h: float
    half_nodes: int
    dt: float
    t_steps: int

    @property
    def nodes_per_axis(self) -> int:
        return 2 * self.half_nodes + 1

    @property
    def node_counts(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.m

    @property
    def total_nodes(self) -> int:
        return self.nodes_per_axis**self.m

    @property
    def axis(self) -> np.ndarray:
        return self.h * np.arange(-self.half_nodes, self.half_nodes + 1)

    @property
    def origin_index(self) -> tuple[int, ...]:
        return (self.half_nodes,) * self.m

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis] * self.m), indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=1)

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn`` (batched over rows of points) at every node."""
        return np.asarray(fn(self.points()), dtype=float).reshape(self.node_counts)


def build_grid(
    m: int,
    gamma: GammaSet,
    h: float,
    dt: float,
    L: float | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> Grid:
    if m > MAX_DIM:
        raise DimensionTooHigh(f"grid solver supports m <= {MAX_DIM}, got {m}")
    if m != gamma.m:
        raise DimensionMismatch(f"grid dimension {m} differs from gamma dimension {gamma.m}")
    if not (h > 0 and dt > 0):
        raise ValueError("h and dt must be positive")
    b = envelope_bound(gamma)
    if L is None:
        L = max(6.0 * b, 8.0 * h)
    elif L < 2.0 * b:
        raise ValueError(f"L={L} is below 2*b={2 * b}")
    half = int(math.floor(L / h + _SNAP))
    if half < 1:
        raise ValueError("grid needs at least one node on each side of the origin")
    total = (2 * half + 1) ** m
    if total > node_budget:
        raise BudgetExceeded(f"{total} nodes exceed the budget of {node_budget}")
    steps = int(math.ceil(1.0 / dt - _SNAP))
    return Grid(m=m, L=float(L), h=float(h), half_nodes=half, dt=1.0 / steps, t_steps=steps)


@dataclass
class GridSlice:
    """Nodal values of the value function at one time level."""

    grid: Grid
    values: np.ndarray
    t: float

    def as_value_slice(self) -> ValueSlice:
        return ValueSlice(self.grid.points(), self.values.ravel().copy())


def _axis_weights(q: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Left node index and fractional weight for fractional indices ``q``.

    Outside ``[0, n-1]`` the weight leaves ``[0, 1]``: linear extrapolation
    from the two outermost nodes.
    """
    r = np.rint(q)
    q = np.where(np.abs(q - r) < _SNAP, r, q)
    lo = np.clip(np.floor(q), 0, n - 2).astype(np.intp)
    return lo, q - lo


def _shift_axis(V: np.ndarray, axis: int, s: float) -> np.ndarray:
    n = V.shape[axis]
    lo, w = _axis_weights(np.arange(n) + s, n)
    if np.all(w == 0.0):
        return np.take(V, lo, axis=axis)
    shape = [1] * V.ndim
    shape[axis] = n
    w = w.reshape(shape)
    left = np.take(V, lo, axis=axis)
    out = np.take(V, lo + 1, axis=axis)
    out -= left
    out *= w
    out += left
    return out


def shifted(V: np.ndarray, grid: Grid, shift: Sequence[float]) -> np.ndarray:
    """Interpolated values at every node displaced by ``shift``."""
    out = V
    for a, s in enumerate(shift):
        if s != 0.0:
            out = _shift_axis(out, a, s / grid.h)
    return out


def interpolate(slice_: GridSlice | np.ndarray, x, grid: Grid | None = None) -> np.ndarray | float:
    """Multilinear interpolation (linear extrapolation outside) at points ``x``."""
    if isinstance(slice_, GridSlice):
        grid, V = slice_.grid, slice_.values
    else:
        V = slice_
        if grid is None:
            raise ValueError("grid required when passing raw values")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n = grid.nodes_per_axis
    los, ws = [], []
    for a in range(grid.m):
        lo, w = _axis_weights(pts[:, a] / grid.h + grid.half_nodes, n)
        los.append(lo)
        ws.append(w)
    out = np.zeros(pts.shape[0])
    for corner in np.ndindex(*(2,) * grid.m):
        weight = np.ones(pts.shape[0])
        idx = []
        for a, c in enumerate(corner):
            weight = weight * (ws[a] if c else 1.0 - ws[a])
            idx.append(los[a] + c)
        out += weight * V[tuple(idx)]
    return float(out[0]) if single else out


def interior_mask(grid: Grid, gamma: GammaSet) -> np.ndarray:
    """Nodes whose two-point reads all stay inside the grid.

    Only there are the interpolation weights nonnegative; boundary nodes read
    through the linear extrapolation.
    """
    reach = np.max(np.abs(gamma.vectors), axis=0) * math.sqrt(grid.dt) / grid.h
    idx = np.arange(grid.nodes_per_axis)
    n = grid.nodes_per_axis
    mask = np.ones(grid.node_counts, dtype=bool)
    for a in range(grid.m):
        ok = (idx - reach[a] >= -_SNAP) & (idx + reach[a] <= n - 1 + _SNAP)
        shape = [1] * grid.m
        shape[a] = n
        mask &= ok.reshape(shape)
    return mask


def sl_step(
    next_values: np.ndarray,
    grid: Grid,
    gamma: GammaSet,
    return_choice: bool = False,
):
    """One backward step; returns new nodal values (and argmax indices)."""
    root = math.sqrt(grid.dt)
    best = None
    choice = None
    for i, gv in enumerate(gamma.vectors):
        d = gv * root
        avg = 0.5 * (shifted(next_values, grid, d) + shifted(next_values, grid, -d))
        if best is None:
            best = avg
            if return_choice:
                choice = np.zeros(avg.shape, dtype=np.int16)
        else:
            if return_choice:
                choice[avg > best] = i
            best = np.maximum(best, avg)
    return (best, choice) if return_choice else best


def heat_step(next_values: np.ndarray, grid: Grid, b: float) -> np.ndarray:
    """Backward step of ``-u_t - (b^2/2) tr(u_xx) = 0``: average over the 2m axis points."""
    r = b * math.sqrt(grid.m * grid.dt)
    acc = np.zeros_like(next_values)
    for a in range(grid.m):
        e = np.zeros(grid.m)
        e[a] = r
        acc += shifted(next_values, grid, e) + shifted(next_values, grid, -e)
    return acc / (2 * grid.m)


@dataclass
class SolveResult:
    value_at_origin: float
    final_slice: GridSlice
    h: float
    dt: float
    richardson_estimate: float | None = None
    refined_value: float | None = None
    slices: list[GridSlice] | None = field(default=None, repr=False)


def _terminal(grid: Grid) -> np.ndarray:
    return grid.sample(g_max)


def solve_gheat(
    gamma: GammaSet,
    grid: Grid,
    *,
    retain_slices: bool = False,
    richardson: bool = False,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> SolveResult:
    """Value at the origin at t=0 after ``grid.t_steps`` backward steps."""
    if gamma.m != grid.m:
        raise DimensionMismatch(f"gamma in R^{gamma.m} but grid is {grid.m}-dimensional")
    V = _terminal(grid)
    kept = [GridSlice(grid, V, 1.0)] if retain_slices else None
    for k in range(grid.t_steps, 0, -1):
        V = sl_step(V, grid, gamma)
        if kept is not None:
            kept.append(GridSlice(grid, V, (k - 1) * grid.dt))
    if kept is not None:
        kept.reverse()  # index j holds time j*dt
    value = float(V[grid.origin_index])
    res = SolveResult(value, GridSlice(grid, V, 0.0), grid.h, grid.dt, slices=kept)
    if richardson:
        fine = build_grid(grid.m, gamma, grid.h / 2, grid.dt / 2, L=grid.L, node_budget=node_budget)
        fv = solve_gheat(gamma, fine).value_at_origin
        res.refined_value = fv
        # both error terms are first order under joint halving
        res.richardson_estimate = 2.0 * fv - value
    return res


def solve_heat(grid: Grid, b: float) -> float:
    """``u(0, 0)`` for the heat equation with diffusion ``b^2`` per coordinate."""
    V = _terminal(grid)
    for _ in range(grid.t_steps):
        V = heat_step(V, grid, b)
    return float(V[grid.origin_index])


def slices_csv(slices: Sequence[GridSlice], levels: Iterable[int]) -> str:
    """CSV ``t,x1,...,xm,value`` for the requested time-level indices."""
    if not slices:
        return ""
    m = slices[0].grid.m
    header = ["t"] + [f"x{i + 1}" for i in range(m)] + ["value"]
    lines = [",".join(header)]
    for j in levels:
        s = slices[j]
        pts = s.grid.points()
        for p, v in zip(pts, s.values.ravel()):
            lines.append(",".join([repr(float(s.t))] + [repr(float(c)) for c in p] + [repr(float(v))]))
    return "\n".join(lines) + "\n"
