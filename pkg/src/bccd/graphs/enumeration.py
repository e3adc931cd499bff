"""Exhaustive enumeration of DAGs, ancestral graphs and equivalence classes.

Canonical DAG order: read the adjacency indicator ``A[i][j] = 1 iff i -> j``
row-major as a bit string and sort ascending (lexicographic order on the
flattened matrix). The edgeless DAG is index 0. Mapping-table rows and
structure-prior weights are indexed by this order, so it is versioned as
``CANONICAL_ORDER_VERSION``.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, product

import numpy as np

from bccd.errors import CapacityError
from bccd.graphs._batch import batch_acyclic, batch_ancestors, batch_fingerprints
from bccd.graphs.core import Dag, Mag, Pag, as_mixed
from bccd.graphs.separation import FINGERPRINT_MAX_NODES, pag_of

CANONICAL_ORDER_VERSION = 1
MAX_ENUM_NODES = 5


def _check_level(n: int) -> None:
    if not isinstance(n, int) or not 1 <= n <= MAX_ENUM_NODES:
        raise CapacityError(f"enumeration supports 1..{MAX_ENUM_NODES} nodes, got {n!r}")


def _adjacency_key(pa: np.ndarray) -> np.ndarray:
    G, n = pa.shape
    key = np.zeros(G, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            bit = (pa[:, j] >> i) & 1
            key |= bit << (n * n - 1 - (i * n + j))
    return key


@lru_cache(maxsize=None)
def dag_table(n: int) -> np.ndarray:
    """Parent masks of every labeled DAG on ``n`` nodes, canonical order."""
    _check_level(n)
    pairs = list(combinations(range(n), 2))
    states = np.array(list(product(range(3), repeat=len(pairs))), dtype=np.int64)
    states = states.reshape(3 ** len(pairs), len(pairs))
    pa = np.zeros((len(states), n), dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        s = states[:, k]
        pa[:, j] |= np.where(s == 1, 1 << i, 0)
        pa[:, i] |= np.where(s == 2, 1 << j, 0)
    pa = pa[batch_acyclic(pa)]
    pa = pa[np.argsort(_adjacency_key(pa), kind="stable")]
    pa.setflags(write=False)
    return pa


@lru_cache(maxsize=None)
def enumerate_dags(n: int) -> tuple[Dag, ...]:
    return tuple(Dag.from_parent_masks(row) for row in dag_table(n))


@lru_cache(maxsize=None)
def dag_index(n: int) -> dict[tuple[int, ...], int]:
    return {tuple(int(v) for v in row): i for i, row in enumerate(dag_table(n))}


def index_of_dag(g: Dag) -> int:
    _check_level(g.node_count)
    return dag_index(g.node_count)[g.parent_masks]


@lru_cache(maxsize=None)
def dag_fingerprints(n: int) -> np.ndarray:
    fp = batch_fingerprints(dag_table(n))
    fp.setflags(write=False)
    return fp


@lru_cache(maxsize=None)
def dag_param_counts(n: int) -> np.ndarray:
    """Free parameters of every DAG with all arities fixed at 2."""
    pa = dag_table(n)
    k = np.zeros_like(pa)
    for b in range(n):
        k += (pa >> b) & 1
    return (np.int64(1) << k).sum(axis=1)


@lru_cache(maxsize=None)
def ancestral_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ancestral graphs without undirected edges on ``n`` nodes.

    Every such graph is a DAG plus bidirected edges between pairs that are
    non-adjacent and ancestrally unrelated in that DAG. Order: by DAG index,
    then by the bitmask of added bidirected pairs. Maximality is not implied.
    """
    _check_level(n)
    dags = dag_table(n)
    anc = batch_ancestors(dags)
    pairs = list(combinations(range(n), 2))
    pa_rows, sp_rows = [], []
    for g in range(len(dags)):
        free = []
        for i, j in pairs:
            adjacent = dags[g, j] >> i & 1 or dags[g, i] >> j & 1
            related = anc[g, j] >> i & 1 or anc[g, i] >> j & 1
            if not adjacent and not related:
                free.append((i, j))
        for bits in range(1 << len(free)):
            sp = [0] * n
            for k, (i, j) in enumerate(free):
                if bits >> k & 1:
                    sp[i] |= 1 << j
                    sp[j] |= 1 << i
            pa_rows.append(dags[g])
            sp_rows.append(sp)
    pa = np.array(pa_rows, dtype=np.int64).reshape(-1, n)
    sp = np.array(sp_rows, dtype=np.int64).reshape(-1, n)
    pa.setflags(write=False)
    sp.setflags(write=False)
    return pa, sp


def _orientations_of(skeleton, n: int):
    """All (pa, sp) arrays for the 3**E ways to mark the given skeleton."""
    edges = sorted(skeleton)
    E = len(edges)
    states = np.array(list(product(range(3), repeat=E)), dtype=np.int64).reshape(3**E, E)
    pa = np.zeros((len(states), n), dtype=np.int64)
    sp = np.zeros((len(states), n), dtype=np.int64)
    for k, (i, j) in enumerate(edges):
        s = states[:, k]
        pa[:, j] |= np.where(s == 0, 1 << i, 0)
        pa[:, i] |= np.where(s == 1, 1 << j, 0)
        sp[:, i] |= np.where(s == 2, 1 << j, 0)
        sp[:, j] |= np.where(s == 2, 1 << i, 0)
    return pa, sp


def _unshielded_collider_signature(pa, sp, skeleton, n):
    adj = {(a, b) for a, b in skeleton} | {(b, a) for a, b in skeleton}
    triples = [
        (a, c, b)
        for c in range(n)
        for a, b in combinations(range(n), 2)
        if (a, c) in adj and (b, c) in adj and (a, b) not in adj
    ]
    cols = []
    into = pa | sp
    for a, c, b in triples:
        cols.append(((into[:, c] >> a) & 1) & ((into[:, c] >> b) & 1))
    if not cols:
        return np.zeros((len(pa), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def markov_equivalence_class(g: Dag | Mag, max_edges: int = 13) -> list[Mag]:
    """All MAGs Markov-equivalent to ``g``.

    Equivalent MAGs share a skeleton, so the search runs over the ``3**E``
    markings of it, filtered by unshielded colliders, ancestrality and
    finally by the full independence fingerprint.
    """
    mg = as_mixed(g)
    n = mg.node_count
    if n > FINGERPRINT_MAX_NODES:
        raise CapacityError(f"equivalence classes limited to {FINGERPRINT_MAX_NODES} nodes")
    skel = mg.skeleton
    if len(skel) > max_edges:
        raise CapacityError(f"skeleton has {len(skel)} edges, limit is {max_edges}")
    pa, sp = _orientations_of(skel, n)
    ref_pa = np.array([mg.parent_masks], dtype=np.int64).reshape(1, n)
    ref_sp = np.array([mg.spouse_masks], dtype=np.int64).reshape(1, n)
    sig = _unshielded_collider_signature(pa, sp, skel, n)
    ref_sig = _unshielded_collider_signature(ref_pa, ref_sp, skel, n)
    keep = (sig == ref_sig).all(axis=1) & batch_acyclic(pa)
    pa, sp = pa[keep], sp[keep]
    anc = batch_ancestors(pa)
    ok = np.ones(len(pa), dtype=bool)
    for v in range(n):
        ok &= (sp[:, v] & anc[:, v] & ~(np.int64(1) << v)) == 0
    pa, sp = pa[ok], sp[ok]
    fp = batch_fingerprints(pa, sp)
    ref_fp = batch_fingerprints(ref_pa, ref_sp)[0]
    same = (fp == ref_fp).all(axis=1)
    return [Mag.from_masks(p, s) for p, s in zip(pa[same], sp[same])]


def pag_of_class(g: Dag | Mag) -> Pag:
    """PAG of the MAG equivalence class of ``g``."""
    return pag_of(markov_equivalence_class(g))


def validate_level(n: int) -> None:
    _check_level(n)


__all__ = [
    "CANONICAL_ORDER_VERSION",
    "MAX_ENUM_NODES",
    "ancestral_table",
    "dag_fingerprints",
    "dag_index",
    "dag_param_counts",
    "dag_table",
    "enumerate_dags",
    "index_of_dag",
    "markov_equivalence_class",
    "pag_of_class",
]

