"""Domain types for finite function classes and the two scalar operators.

A finite class ``{f_1, ..., f_m}`` on a finite domain ``{z_1, ..., z_k}`` is
stored as an ``m x k`` table.  Everything downstream works with the set of
columns ``gamma = F(z_j)``, which is what the adversary actually picks from.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from numbers import Real
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, MalformedSpec, NonFiniteEntry

__all__ = [
    "FunctionClass",
    "GammaSet",
    "SymMatrix",
    "load_class",
    "load_class_file",
    "gamma_of",
    "as_gamma",
    "g_max",
    "G_operator",
    "envelope_bound",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """Table ``values[i, j] = f_i(z_j)``."""

    values: np.ndarray
    label: str | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise MalformedSpec(f"function table must be a nonempty m x |Z| matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteEntry("function table contains NaN or inf")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def z_count(self) -> int:
        return self.values.shape[1]

    @property
    def b(self) -> float:
        return float(np.max(np.abs(self.values)))

    def F(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def __repr__(self) -> str:
        return f"FunctionClass(m={self.m}, z_count={self.z_count})"


@dataclass(frozen=True, eq=False)
class GammaSet:
    """Finite set of increment vectors in R^m, one row per vector."""

    vectors: np.ndarray
    label: str | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise MalformedSpec(f"gamma must be a nonempty list of m-vectors, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteEntry("gamma contains NaN or inf")
        seen = set()
        for row in v:
            key = row.tobytes()
            if key in seen:
                raise MalformedSpec("gamma contains duplicate vectors")
            seen.add(key)
        object.__setattr__(self, "vectors", _frozen(v))

    @classmethod
    def from_vectors(cls, vectors: Any, label: str | None = None) -> "GammaSet":
        """Build from possibly repeated vectors, keeping first occurrences."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        return cls(_dedup_rows(v), label=label)

    @property
    def m(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def b(self) -> float:
        return envelope_bound(self)

    def __repr__(self) -> str:
        return f"GammaSet(m={self.m}, size={self.size})"


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Symmetric matrix; the upper triangle of the input is authoritative."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        upper = np.triu(a)
        object.__setattr__(self, "entries", _frozen(upper + np.triu(a, 1).T))

    @property
    def m(self) -> int:
        return self.entries.shape[0]


def _dedup_rows(v: np.ndarray) -> np.ndarray:
    # bitwise comparison on purpose: no epsilon merging of user data
    keep, seen = [], set()
    for i, row in enumerate(v):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return v[keep]


def _numeric_table(rows: Any, what: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise MalformedSpec(f'"{what}" must be a nonempty array of arrays')
    width = None
    for r in rows:
        if not isinstance(r, list) or not r:
            raise MalformedSpec(f'every entry of "{what}" must be a nonempty array')
        if width is None:
            width = len(r)
        elif len(r) != width:
            raise MalformedSpec(f'ragged rows in "{what}"')
        for x in r:
            # bool is a subclass of int; JSON true/false are not numbers here
            if isinstance(x, bool) or not isinstance(x, Real):
                raise MalformedSpec(f'non-numeric entry {x!r} in "{what}"')
            if not math.isfinite(x):
                raise NonFiniteEntry(f'non-finite entry {x!r} in "{what}"')
    return np.array(rows, dtype=float)


def load_class(doc: Union[str, bytes, Mapping[str, Any]]) -> Union[FunctionClass, GammaSet]:
    """Parse an input document into a ``FunctionClass`` or a ``GammaSet``.

    The document is a JSON object (text or already-decoded mapping) with
    exactly one of ``"functions"`` or ``"gamma"`` and an optional ``"label"``.
    """
    if isinstance(doc, (str, bytes)):
        try:
            # NaN/Infinity literals are accepted by the decoder and rejected below
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedSpec(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise MalformedSpec("input document must be a JSON object")
    has_f, has_g = "functions" in doc, "gamma" in doc
    if has_f == has_g:
        raise MalformedSpec('document must contain exactly one of "functions" or "gamma"')
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise MalformedSpec('"label" must be a string')
    if has_f:
        return FunctionClass(_numeric_table(doc["functions"], "functions"), label=label)
    return GammaSet.from_vectors(_numeric_table(doc["gamma"], "gamma"), label=label)


def load_class_file(path: Union[str, Path]) -> Union[FunctionClass, GammaSet]:
    return load_class(Path(path).read_text(encoding="utf-8"))


def gamma_of(fc: FunctionClass) -> GammaSet:
    """Distinct columns ``F(z_j)`` of the table, in order of first appearance."""
    return GammaSet(_dedup_rows(fc.values.T.copy()), label=fc.label)


def as_gamma(obj: Union[FunctionClass, GammaSet, Sequence]) -> GammaSet:
    if isinstance(obj, GammaSet):
        return obj
    if isinstance(obj, FunctionClass):
        return gamma_of(obj)
    return GammaSet.from_vectors(obj)


def g_max(x: Any) -> Any:
    """Largest coordinate; batched over leading axes."""
    return np.max(np.asarray(x, dtype=float), axis=-1)


def G_operator(S: Union[SymMatrix, np.ndarray], gamma: GammaSet) -> float:
    """``0.5 * max over gamma of gamma' S gamma``, by enumeration."""
    if not isinstance(S, SymMatrix):
        S = SymMatrix(S)
    if S.m != gamma.m:
        raise DimensionMismatch(f"matrix is {S.m}x{S.m} but gamma vectors live in R^{gamma.m}")
    quad = np.einsum("ki,ij,kj->k", gamma.vectors, S.entries, gamma.vectors)
    return 0.5 * float(np.max(quad))


def envelope_bound(gamma: GammaSet) -> float:
    return float(np.max(np.abs(gamma.vectors)))
