"""Mutable search state: statement ledger, skeleton, causal logic matrix."""
from __future__ import annotations

from enum import IntEnum
from itertools import combinations

import numpy as np

from bccd.errors import ArgumentError, InvariantViolation
from bccd.statements.core import CausalStatement, Kind, close_dense


class StatementLedger:
    """Running maximum probability of every statement seen so far."""

    def __init__(self, entries=None):
        self._p: dict[CausalStatement, float] = {}
        for s, p in (entries or {}).items():
            self.update(s, p)

    def update(self, s: CausalStatement, p: float) -> None:
        p = float(p)
        if not 0.0 <= p <= 1.0 + 1e-9:
            raise ArgumentError(f"probability {p} outside [0, 1]")
        p = min(p, 1.0)
        if p > self._p.get(s, -1.0):
            self._p[s] = p

    def merge(self, other: "StatementLedger") -> None:
        for s, p in other.items():
            self.update(s, p)

    def get(self, s: CausalStatement, default: float = 0.0) -> float:
        return self._p.get(s, default)

    def items(self):
        return self._p.items()

    def __contains__(self, s):
        return s in self._p

    def __len__(self):
        return len(self._p)

    def copy(self) -> "StatementLedger":
        out = StatementLedger()
        out._p = dict(self._p)
        return out


class Skeleton:
    """Undirected adjacencies over named variables; edges can only be removed."""

    def __init__(self, names, edges=None):
        self.names = tuple(names)
        self._pos = {v: i for i, v in enumerate(self.names)}
        if len(self._pos) != len(self.names):
            raise ArgumentError("duplicate variable names")
        if edges is None:
            edges = combinations(self.names, 2)
        self._edges = {self._key(a, b) for a, b in edges}

    @classmethod
    def complete(cls, names) -> "Skeleton":
        return cls(names)

    def _key(self, a, b) -> tuple:
        if a not in self._pos or b not in self._pos:
            raise ArgumentError(f"unknown variable in edge {a!r} - {b!r}")
        if a == b:
            raise ArgumentError("self-loop in skeleton")
        return (a, b) if self._pos[a] < self._pos[b] else (b, a)

    def adjacent(self, a, b) -> bool:
        return self._key(a, b) in self._edges

    def remove(self, a, b) -> bool:
        k = self._key(a, b)
        if k in self._edges:
            self._edges.discard(k)
            return True
        return False

    def neighbors(self, v) -> tuple:
        """Neighbors of v in variable order."""
        return tuple(u for u in self.names if u != v and self._key(u, v) in self._edges)

    @property
    def edges(self) -> tuple:
        return tuple(sorted(self._edges, key=lambda e: (self._pos[e[0]], self._pos[e[1]])))

    def copy(self) -> "Skeleton":
        return Skeleton(self.names, self._edges)

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return self.names == other.names and self._edges == other._edges

    def __len__(self):
        return len(self._edges)


class Status(IntEnum):
    UNKNOWN = 0
    CAUSES = 1
    NOT_CAUSES = 2


class CausalLogicMatrix:
    """Cause / non-cause / disjunction knowledge over named variables.

    ``C[i, j]``: i is an ancestor of j; ``N[i, j]``: it is not;
    ``D[i, j, k]``: i is an ancestor of j or of k.
    """

    def __init__(self, names):
        self.names = tuple(names)
        self._pos = {v: i for i, v in enumerate(self.names)}
        n = len(self.names)
        self.N = np.eye(n, dtype=bool)
        self.C = np.zeros((n, n), dtype=bool)
        self.D = np.zeros((n, n, n), dtype=bool)

    def index(self, v) -> int:
        try:
            return self._pos[v]
        except KeyError:
            raise ArgumentError(f"unknown variable {v!r}") from None

    def status(self, a, b) -> Status:
        i, j = self.index(a), self.index(b)
        if self.C[i, j]:
            return Status.CAUSES
        if self.N[i, j]:
            return Status.NOT_CAUSES
        return Status.UNKNOWN

    def holds(self, s: CausalStatement) -> bool:
        if s.kind == Kind.NON_CAUSE:
            return bool(self.N[self.index(s.z), self.index(s.x)])
        if s.kind == Kind.CAUSE:
            return bool(self.C[self.index(s.z), self.index(s.x)])
        if s.kind == Kind.DISJUNCTIVE:
            return bool(self.D[self.index(s.z), self.index(s.x), self.index(s.y)])
        return False

    def tensor(self) -> np.ndarray:
        """``(n, n, n)`` int8: cell (i, j, j) is the Status of i => j, cell
        (i, j, k) with j < k is 1 when (i => j) or (i => k) is asserted."""
        n = len(self.names)
        out = self.D.astype(np.int8)
        for j in range(n):
            out[:, j, j] = np.where(self.C[:, j], Status.CAUSES, np.where(self.N[:, j], Status.NOT_CAUSES, 0))
        lower = np.tril(np.ones((n, n), dtype=bool), -1)
        out[:, lower] = 0
        return out

    def causal_matrix(self) -> np.ndarray:
        """``(n, n)`` Status codes; the diagonal is NOT_CAUSES."""
        out = np.zeros(self.C.shape, dtype=np.int8)
        out[self.N] = Status.NOT_CAUSES
        out[self.C] = Status.CAUSES
        return out

    def copy(self) -> "CausalLogicMatrix":
        out = CausalLogicMatrix(self.names)
        out.N, out.C, out.D = self.N.copy(), self.C.copy(), self.D.copy()
        return out

    def check(self) -> None:
        """Raise when an invariant of a closed matrix fails."""
        if (self.C & self.N).any():
            raise InvariantViolation("a pair is both cause and non-cause")
        if (self.C & self.C.T).any():
            raise InvariantViolation("cause cycle")
        if not np.array_equal(self.C | (self.C.astype(np.uint8) @ self.C.astype(np.uint8) > 0), self.C):
            raise InvariantViolation("cause relation not transitively closed")
        if (self.D & self.N[:, :, None] & ~self.C[:, None, :]).any():
            raise InvariantViolation("disjunction elimination not applied")


def causal_logic_closure(lc: CausalLogicMatrix, s: CausalStatement) -> str:
    """Add ``s`` and close; returns ``"applied"`` or ``"skipped-conflict"``.

    A statement whose closure contradicts existing knowledge leaves ``lc``
    untouched. NonAdjacent statements carry no causal content here.
    """
    if s.kind == Kind.NON_ADJACENT:
        return "applied"
    N, C, D = lc.N.copy(), lc.C.copy(), lc.D.copy()
    if s.kind == Kind.NON_CAUSE:
        N[lc.index(s.z), lc.index(s.x)] = True
    elif s.kind == Kind.CAUSE:
        C[lc.index(s.z), lc.index(s.x)] = True
    else:
        z, x, y = lc.index(s.z), lc.index(s.x), lc.index(s.y)
        D[z, x, y] = D[z, y, x] = True
    N3, C3, D3 = N[None], C[None], D[None]
    if close_dense(N3, D3, C3)[0]:
        return "skipped-conflict"
    lc.N, lc.C, lc.D = N3[0], C3[0], D3[0]
    return "applied"


__all__ = [
    "CausalLogicMatrix",
    "Skeleton",
    "StatementLedger",
    "Status",
    "causal_logic_closure",
]
