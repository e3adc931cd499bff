"""Logical causal statements, their per-level encoding and logic closure.

Four kinds of statement over at most three variables:

* ``NonAdjacent(x, y)``: no direct edge between x and y (x < y).
* ``NonCause(z, x)``: z is not an ancestor of x.
* ``DisjunctiveCause(z, x, y)``: z is an ancestor of x or of y (x < y).
* ``Cause(z, x)``: z is an ancestor of x.

Variables are arbitrary hashable labels: positional slots inside mapping
tables, variable names inside the search.

For structures on ``n`` nodes the statements are enumerated in a fixed
order (``statement_space(n)``) so a set of statements becomes a boolean
row vector and intersection is ``&``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from itertools import combinations
from typing import Hashable

import numpy as np

from bccd.errors import ArgumentError


class Kind(IntEnum):
    NON_ADJACENT = 0
    NON_CAUSE = 1
    DISJUNCTIVE = 2
    CAUSE = 3


@dataclass(frozen=True)
class CausalStatement:
    kind: Kind
    z: Hashable | None = None
    x: Hashable | None = None
    y: Hashable | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == Kind.NON_ADJACENT:
            if self.z is not None or self.x is None or self.y is None:
                raise ArgumentError("NonAdjacent takes exactly x and y")
            vs = (self.x, self.y)
        elif kind == Kind.DISJUNCTIVE:
            if None in (self.z, self.x, self.y):
                raise ArgumentError("DisjunctiveCause takes z, x and y")
            vs = (self.z, self.x, self.y)
        else:
            if self.z is None or self.x is None or self.y is not None:
                raise ArgumentError(f"{kind.name} takes exactly z and x")
            vs = (self.z, self.x)
        if len(set(vs)) != len(vs):
            raise ArgumentError(f"statement variables must be distinct: {vs!r}")
        if kind in (Kind.NON_ADJACENT, Kind.DISJUNCTIVE) and _key(self.y) < _key(self.x):
            x, y = self.x, self.y
            object.__setattr__(self, "x", y)
            object.__setattr__(self, "y", x)

    @property
    def variables(self) -> tuple:
        return tuple(v for v in (self.z, self.x, self.y) if v is not None)

    def sort_key(self):
        return (int(self.kind),) + tuple(_key(v) for v in self.variables)

    def relabel(self, names) -> "CausalStatement":
        """Map every variable through ``names`` (a sequence or mapping)."""

        def m(v):
            return None if v is None else names[v]

        return CausalStatement(self.kind, m(self.z), m(self.x), m(self.y))

    def __str__(self):
        if self.kind == Kind.NON_ADJACENT:
            return f"{self.x} -/- {self.y}"
        if self.kind == Kind.NON_CAUSE:
            return f"{self.z} =/=> {self.x}"
        if self.kind == Kind.CAUSE:
            return f"{self.z} => {self.x}"
        return f"({self.z} => {self.x}) or ({self.z} => {self.y})"


def _key(v):
    # ints sort numerically, everything else by its string form
    return (0, v, "") if isinstance(v, (int, np.integer)) else (1, 0, str(v))


def NonAdjacent(x, y) -> CausalStatement:
    return CausalStatement(Kind.NON_ADJACENT, None, x, y)


def NonCause(z, x) -> CausalStatement:
    return CausalStatement(Kind.NON_CAUSE, z, x)


def Cause(z, x) -> CausalStatement:
    return CausalStatement(Kind.CAUSE, z, x)


def DisjunctiveCause(z, x, y) -> CausalStatement:
    return CausalStatement(Kind.DISJUNCTIVE, z, x, y)


@lru_cache(maxsize=None)
def statement_space(n: int) -> tuple[CausalStatement, ...]:
    """All positional statements on ``n`` nodes, in canonical order."""
    out = [NonAdjacent(x, y) for x, y in combinations(range(n), 2)]
    out += [NonCause(z, x) for z in range(n) for x in range(n) if x != z]
    out += [
        DisjunctiveCause(z, x, y)
        for z in range(n)
        for x, y in combinations(range(n), 2)
        if z not in (x, y)
    ]
    out += [Cause(z, x) for z in range(n) for x in range(n) if x != z]
    return tuple(out)


@lru_cache(maxsize=None)
def statement_lookup(n: int) -> dict[CausalStatement, int]:
    return {s: i for i, s in enumerate(statement_space(n))}


@lru_cache(maxsize=None)
def _layout(n: int):
    """Index arrays tying the flat vector to dense matrices."""
    space = statement_space(n)
    na, nc, dj, ca = [], [], [], []
    for i, s in enumerate(space):
        if s.kind == Kind.NON_ADJACENT:
            na.append((i, s.x, s.y))
        elif s.kind == Kind.NON_CAUSE:
            nc.append((i, s.z, s.x))
        elif s.kind == Kind.DISJUNCTIVE:
            dj.append((i, s.z, s.x, s.y))
        else:
            ca.append((i, s.z, s.x))
    return tuple(np.array(v, dtype=np.int64).reshape(-1, w) for v, w in ((na, 3), (nc, 3), (dj, 4), (ca, 3)))


def rows_to_sets(rows: np.ndarray, n: int) -> list[frozenset]:
    space = statement_space(n)
    return [frozenset(space[i] for i in np.flatnonzero(r)) for r in np.atleast_2d(rows)]


def set_to_row(statements, n: int) -> np.ndarray:
    lookup = statement_lookup(n)
    row = np.zeros(len(lookup), dtype=bool)
    for s in statements:
        try:
            row[lookup[s]] = True
        except KeyError:
            raise ArgumentError(f"statement {s} does not fit {n} positional slots") from None
    return row


def to_dense(rows: np.ndarray, n: int):
    """Flat rows -> (NA, N, D, C) dense boolean arrays per row."""
    rows = np.atleast_2d(rows)
    G = len(rows)
    na_i, nc_i, dj_i, ca_i = _layout(n)
    NA = np.zeros((G, n, n), dtype=bool)
    N = np.zeros((G, n, n), dtype=bool)
    D = np.zeros((G, n, n, n), dtype=bool)
    C = np.zeros((G, n, n), dtype=bool)
    if len(na_i):
        NA[:, na_i[:, 1], na_i[:, 2]] = rows[:, na_i[:, 0]]
        NA[:, na_i[:, 2], na_i[:, 1]] = rows[:, na_i[:, 0]]
    if len(nc_i):
        N[:, nc_i[:, 1], nc_i[:, 2]] = rows[:, nc_i[:, 0]]
        C[:, ca_i[:, 1], ca_i[:, 2]] = rows[:, ca_i[:, 0]]
    if len(dj_i):
        D[:, dj_i[:, 1], dj_i[:, 2], dj_i[:, 3]] = rows[:, dj_i[:, 0]]
        D[:, dj_i[:, 1], dj_i[:, 3], dj_i[:, 2]] = rows[:, dj_i[:, 0]]
    return NA, N, D, C


def from_dense(NA, N, D, C, n: int) -> np.ndarray:
    na_i, nc_i, dj_i, ca_i = _layout(n)
    G = len(N)
    rows = np.zeros((G, len(statement_space(n))), dtype=bool)
    if len(na_i):
        rows[:, na_i[:, 0]] = NA[:, na_i[:, 1], na_i[:, 2]]
    if len(nc_i):
        rows[:, nc_i[:, 0]] = N[:, nc_i[:, 1], nc_i[:, 2]]
        rows[:, ca_i[:, 0]] = C[:, ca_i[:, 1], ca_i[:, 2]]
    if len(dj_i):
        rows[:, dj_i[:, 0]] = D[:, dj_i[:, 1], dj_i[:, 2], dj_i[:, 3]]
    return rows


def close_dense(N, D, C):
    """Close (N, D, C) under the causal logic rules, in place.

    Rules, with ``N[a, b]`` for a =/=> b and ``C[a, b]`` for a => b:

    * transitivity: a => b, b => c gives a => c
    * its contrapositive: c =/=> b, a => b gives c =/=> a
    * irreflexivity: a =/=> a (so a => b gives b =/=> a)
    * disjunction elimination: (z => x or z => y), z =/=> x gives z => y
    * disjunction absorption: (z => x or z => y), y => x gives z => x
    * disjunction introduction: z => x gives (z => x or z => y)

    Returns a boolean per row: True where the closure is contradictory
    (some pair is both cause and non-cause).
    """
    n = N.shape[-1]
    eye = np.eye(n, dtype=bool)
    N |= eye
    while True:
        before = (N.sum(), C.sum())
        C |= _compose(C, C)
        N |= _compose(N, C.transpose(0, 2, 1))
        C |= (D & N[:, :, :, None]).any(axis=2)
        C |= (D & C.transpose(0, 2, 1)[:, None, :, :]).any(axis=3)
        if (N.sum(), C.sum()) == before:
            break
    n_idx = np.arange(n)
    D |= C[:, :, :, None] | C[:, :, None, :]
    D[:, n_idx, n_idx, :] = False
    D[:, n_idx, :, n_idx] = False
    D[:, :, n_idx, n_idx] = False
    return (N & C).any(axis=(1, 2))


def _compose(A, B):
    """Boolean matrix product per row: out[g, a, c] = any_b A[g, a, b] & B[g, b, c]."""
    return np.matmul(A.astype(np.uint8), B.astype(np.uint8)) > 0


def close_rows(rows: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Close flat statement rows; returns (closed rows, contradiction flags)."""
    NA, N, D, C = to_dense(rows, n)
    bad = close_dense(N, D, C)
    return from_dense(NA, N, D, C, n), bad


__all__ = [
    "Cause",
    "CausalStatement",
    "DisjunctiveCause",
    "Kind",
    "NonAdjacent",
    "NonCause",
    "close_dense",
    "close_rows",
    "from_dense",
    "rows_to_sets",
    "set_to_row",
    "statement_lookup",
    "statement_space",
    "to_dense",
]
