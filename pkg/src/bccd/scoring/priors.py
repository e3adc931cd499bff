"""Structure priors over the canonical DAGs of one level.

The multi-level prior starts from a prior over K-node DAGs and derives
priors for smaller levels by marginalization: each K-node DAG passes its
mass to the independence pattern it induces on an m-node subset, averaged
over all ordered choices of that subset. Pattern mass then goes uniformly
to the optimal uDAGs of the pattern (for a DAG pattern: its Markov
equivalence class).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs._batch import ci_index, ci_lookup, fingerprint_keys
from bccd.graphs.enumeration import MAX_ENUM_NODES, dag_fingerprints, dag_table
from bccd.statements.catalog import mag_catalog
from bccd.statements.rules import optimal_dags_by_mag_class


@dataclass(frozen=True, eq=False)
class StructurePrior:
    level: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or len(w) != len(dag_table(self.level)):
            raise ArgumentError(f"level {self.level} prior needs {len(dag_table(self.level))} weights")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ArgumentError("prior weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, StructurePrior):
            return NotImplemented
        return self.level == other.level and np.array_equal(self.weights, other.weights)


def _check(n) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_ENUM_NODES:
        raise CapacityError(f"structure priors cover levels 1..{MAX_ENUM_NODES}, got {n!r}")


def structure_prior_uniform(n: int) -> StructurePrior:
    _check(n)
    G = len(dag_table(n))
    return StructurePrior(n, np.full(G, 1.0 / G))


@lru_cache(maxsize=None)
def _query_maps(K: int, m: int) -> tuple:
    """For every ordered m-subset of K nodes: K-level column of each m-level query."""
    look = ci_lookup(K)
    out = []
    for sub in permutations(range(K), m):
        cols = []
        for x, y, z in ci_index(m):
            a, b = sorted((sub[x], sub[y]))
            zk = 0
            for v in range(m):
                if z >> v & 1:
                    zk |= 1 << sub[v]
            cols.append(look[(a, b, zk)])
        out.append(np.array(cols, dtype=np.int64))
    return tuple(out)


def projected_class_mass(K: int, base_weights, m: int) -> np.ndarray:
    """Mass of every level-m MAG-catalog class implied by weights on K-node DAGs.

    ``base_weights`` may hold Fractions (object dtype), in which case the
    result is exact.
    """
    _check(K)
    if not 1 <= m <= K:
        raise ArgumentError(f"level {m} is not in 1..{K}")
    w = np.asarray(base_weights)
    if len(w) != len(dag_table(K)):
        raise ArgumentError(f"need {len(dag_table(K))} base weights")
    cat = mag_catalog(m)
    lookup = cat.keys
    fpK = dag_fingerprints(K)
    maps = _query_maps(K, m)
    total = np.zeros(len(cat), dtype=w.dtype)
    if w.dtype == object:
        total[:] = 0
    for cols in maps:
        keys = fingerprint_keys(fpK[:, cols])
        uniq, inv = np.unique(keys, return_inverse=True)
        cls = np.array([lookup[k] for k in uniq], dtype=np.int64)[inv]
        np.add.at(total, cls, w)
    return total / len(maps)


def spread_class_mass(m: int, class_mass) -> np.ndarray:
    """DAG weights from class masses: each class's mass is split evenly over its optimal uDAGs."""
    opt = optimal_dags_by_mag_class(m)
    cm = np.asarray(class_mass)
    out = np.zeros(len(dag_table(m)), dtype=cm.dtype)
    if cm.dtype == object:
        out[:] = 0
    for c, dags in enumerate(opt):
        out[dags] += cm[c] / len(dags)
    return out


def structure_prior_multilevel(K: int, base: StructurePrior | None = None) -> dict[int, StructurePrior]:
    """Consistent priors for levels 1..K from a prior on K-node DAGs (uniform by default)."""
    _check(K)
    if base is None:
        return dict(_uniform_multilevel(K))
    if base.level != K:
        raise ArgumentError(f"base prior is level {base.level}, expected {K}")
    out = {K: base}
    for m in range(1, K):
        w = spread_class_mass(m, projected_class_mass(K, base.weights, m))
        out[m] = StructurePrior(m, w / w.sum())
    return out


@lru_cache(maxsize=None)
def _uniform_multilevel(K: int) -> tuple:
    return tuple(structure_prior_multilevel(K, structure_prior_uniform(K)).items())


def implied_probability(weights, level: int, x: int, y: int, z=()) -> float:
    """Prior (or posterior) mass of DAGs entailing ``x _||_ y | z`` at this level."""
    zm = 0
    for v in z:
        zm |= 1 << v
    qi = ci_lookup(level)[(min(x, y), max(x, y), zm)]
    w = np.asarray(weights)
    return w[dag_fingerprints(level)[:, qi]].sum()


__all__ = [
    "StructurePrior",
    "implied_probability",
    "projected_class_mass",
    "spread_class_mass",
    "structure_prior_multilevel",
    "structure_prior_uniform",
]
