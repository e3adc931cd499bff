"""Vectorized separation over many small graphs at once.

A batch of ``G`` graphs on ``n`` nodes is a pair of ``(G, n)`` integer
arrays (uint8 for up to 8 nodes): ``pa[g, v]`` is the parent bitmask of node ``v`` and ``sp[g, v]``
its bidirected-neighbour bitmask (all zero for DAGs).

Separation uses the augmented-graph criterion: ``x`` and ``y`` are
m-separated by ``Z`` iff ``Z`` separates them in the graph on
``A = An({x, y} u Z)`` that joins every pair inside ``D u pa(D)`` for each
district ``D`` of the subgraph induced by ``A``. For DAGs this is plain
moralization of the ancestral set.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def ci_index(n: int) -> tuple[tuple[int, int, int], ...]:
    """Canonical list of CI queries ``(x, y, zmask)`` on ``n`` nodes.

    Order: pairs ``x < y`` lexicographically, then ``zmask`` ascending.
    """
    out = []
    for x in range(n):
        for y in range(x + 1, n):
            others = ((1 << n) - 1) & ~(1 << x) & ~(1 << y)
            for z in range(1 << n):
                if z & ~others == 0:
                    out.append((x, y, z))
    return tuple(out)


@lru_cache(maxsize=None)
def ci_lookup(n: int) -> dict[tuple[int, int, int], int]:
    return {q: i for i, q in enumerate(ci_index(n))}


def _dtype(n: int):
    return np.uint8 if n <= 8 else np.int64


def _spread(bits, dtype):
    """0/1 array -> all-ones / zero mask of ``dtype``."""
    return (0 - bits.astype(dtype)).astype(dtype)


def _bit(arr, i):
    return (arr >> i) & 1


def batch_ancestors(pa: np.ndarray) -> np.ndarray:
    """Reflexive ancestor masks, shape ``(G, n)``."""
    G, n = pa.shape
    dt = pa.dtype
    anc = np.broadcast_to((np.ones(1, dtype=np.int64) << np.arange(n)).astype(dt), (G, n)).copy()
    for _ in range(n):
        new = anc.copy()
        for u in range(n):
            new |= anc[:, u : u + 1] & _spread(_bit(pa, u), dt)
        if np.array_equal(new, anc):
            break
        anc = new
    return anc


def batch_acyclic(pa: np.ndarray) -> np.ndarray:
    G, n = pa.shape
    removed = np.zeros(G, dtype=np.int64)
    pa = pa.astype(np.int64)
    for _ in range(n):
        for v in range(n):
            free = (pa[:, v] & ~removed) == 0
            removed |= np.where(free, np.int64(1) << v, 0)
    return removed == (1 << n) - 1


def batch_separated(pa, sp, anc, x: int, y: int, zmask: int) -> np.ndarray:
    """Boolean ``(G,)``: is ``x`` m-separated from ``y`` given ``zmask``."""
    G, n = pa.shape
    dt = pa.dtype
    unit = (np.ones(1, dtype=np.int64) << np.arange(n)).astype(dt)
    S = (1 << x) | (1 << y) | zmask
    A = np.zeros(G, dtype=dt)
    for v in range(n):
        if S >> v & 1:
            A |= anc[:, v]
    Acol = A[:, None]
    paA = pa & Acol
    inA = _spread(_bit(Acol, np.arange(n, dtype=dt)), dt)
    if sp is not None:
        spA = sp & Acol
        dist = np.broadcast_to(unit, (G, n)).copy()
        for _ in range(n - 1):
            new = dist.copy()
            for u in range(n):
                new |= spA[:, u : u + 1] & _spread(_bit(dist, u), dt)
            if np.array_equal(new, dist):
                break
            dist = new
        closure = dist.copy()
        for u in range(n):
            closure |= paA[:, u : u + 1] & _spread(_bit(dist, u), dt)
    else:
        closure = paA | unit
    closure &= inA
    adj = np.zeros((G, n), dtype=dt)
    for v in range(n):
        cv = closure[:, v : v + 1]
        adj |= cv & _spread(_bit(cv, np.arange(n, dtype=dt)), dt)
    allowed = np.array(~zmask & ((1 << n) - 1)).astype(dt)
    adj &= allowed
    reach = np.full(G, 1 << x, dtype=dt)
    for _ in range(n - 1):
        new = reach.copy()
        for i in range(n):
            new |= adj[:, i] & _spread(_bit(reach, i), dt)
        if np.array_equal(new, reach):
            break
        reach = new
    return _bit(reach, y) == 0


def batch_fingerprints(pa: np.ndarray, sp: np.ndarray | None = None) -> np.ndarray:
    """Boolean ``(G, len(ci_index(n)))``: which canonical CI queries hold."""
    pa = np.asarray(pa)
    if pa.ndim != 2:
        raise ValueError("expected a (G, n) array of parent masks")
    G, n = pa.shape
    pa = pa.astype(_dtype(n))
    if sp is not None:
        sp = np.asarray(sp).astype(_dtype(n))
        if not sp.any():
            sp = None
    anc = batch_ancestors(pa)
    queries = ci_index(n)
    out = np.zeros((G, len(queries)), dtype=bool)
    for i, (x, y, z) in enumerate(queries):
        out[:, i] = batch_separated(pa, sp, anc, x, y, z)
    return out


def fingerprint_keys(fp: np.ndarray) -> np.ndarray:
    """Hashable per-row keys (bytes) for grouping fingerprint rows."""
    packed = np.packbits(fp, axis=1)
    return np.array([r.tobytes() for r in packed], dtype=object)
