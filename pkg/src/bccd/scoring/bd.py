"""Contingency counts and Bayesian Dirichlet (BD) marginal likelihoods.

The BD metric of a DAG decomposes over families; for child ``i`` with
``q`` parent configurations and ``r`` values::

    sum_j [lgamma(N'_ij) - lgamma(N_ij + N'_ij)]
      + sum_jk [lgamma(N_ijk + N'_ijk) - lgamma(N'_ijk)]

K2 uses ``N'_ijk = 1``; BDeu uses ``N'_ijk = ess / (r q)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from bccd.errors import ArgumentError
from bccd.graphs.core import Dag
from bccd.scoring.data import Dataset


@dataclass(frozen=True)
class CountTable:
    """Counts ``N_ijk``; row ``j`` is a parent configuration, column ``k`` a child value.

    Parent configurations use mixed radix with the *first* parent most
    significant: for parents (A, B) with arities (2, 3), j = 3 * a + b.
    """

    child: object
    parents: tuple
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def q(self) -> int:
        return self.counts.shape[0]

    @property
    def r(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def config_index(values: np.ndarray, arities) -> np.ndarray:
    """Mixed-radix index of each row of ``values`` (first column most significant)."""
    j = np.zeros(values.shape[0], dtype=np.int64)
    for col, r in zip(values.T, arities):
        j = j * r + col
    return j


def count_table(ds: Dataset, child, parents=()) -> CountTable:
    c = ds.index(child)
    ps = [ds.index(p) for p in parents]
    if len(set(ps)) != len(ps):
        raise ArgumentError("duplicate parents")
    if c in ps:
        raise ArgumentError("child cannot be its own parent")
    r = ds.arities[c]
    ar = [ds.arities[p] for p in ps]
    q = int(np.prod(ar, dtype=np.int64)) if ar else 1
    j = config_index(ds.values[:, ps], ar)
    flat = np.bincount(j * r + ds.values[:, c], minlength=q * r)
    return CountTable(ds.names[c], tuple(ds.names[p] for p in ps), flat.reshape(q, r))


@dataclass(frozen=True)
class DirichletPrior:
    kind: str = "K2"
    ess: float = 1.0

    def __post_init__(self):
        if self.kind not in ("K2", "BDeu"):
            raise ArgumentError(f"unknown Dirichlet prior {self.kind!r}")
        if not self.ess > 0:
            raise ArgumentError("equivalent sample size must be positive")

    @classmethod
    def k2(cls) -> "DirichletPrior":
        return cls("K2")

    @classmethod
    def bdeu(cls, ess: float = 1.0) -> "DirichletPrior":
        return cls("BDeu", float(ess))

    def pseudocount(self, r: int, q: int) -> float:
        """``N'_ijk`` for a family with child arity r and q parent configurations."""
        return 1.0 if self.kind == "K2" else self.ess / (r * q)


K2 = DirichletPrior.k2()


def family_score(counts: np.ndarray, prior: DirichletPrior = K2) -> float:
    """Log BD contribution of one family from its ``(q, r)`` count matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    q, r = counts.shape
    a = prior.pseudocount(r, q)
    n_ij = counts.sum(axis=1)
    s = np.sum(gammaln(r * a) - gammaln(n_ij + r * a))
    s += np.sum(gammaln(counts + a) - gammaln(a))
    return float(s)


def _columns(ds: Dataset, g: Dag, variables) -> list[int]:
    if variables is None:
        if ds.n_vars != g.node_count:
            raise ArgumentError(
                f"graph has {g.node_count} nodes but dataset has {ds.n_vars} columns; pass variables"
            )
        return list(range(ds.n_vars))
    cols = [ds.index(v) for v in variables]
    if len(cols) != g.node_count or len(set(cols)) != len(cols):
        raise ArgumentError("variables must name one distinct column per graph node")
    return cols


def log_bd_score(ds: Dataset, g: Dag, prior: DirichletPrior = K2, variables=None) -> float:
    """``ln p(D | g)``; graph node ``i`` is column ``variables[i]``."""
    cols = _columns(ds, g, variables)
    total = 0.0
    for v in range(g.node_count):
        pa = [cols[u] for u in range(g.node_count) if g.parent_masks[v] >> u & 1]
        total += family_score(count_table(ds, cols[v], pa).counts, prior)
    return total


class FamilyScoreCache:
    """Memoized family scores keyed by (child name, parent name set).

    One cache serves a single dataset and Dirichlet prior; subsets of that
    dataset share it because keys are variable names. Scores do not depend
    on parent order, so the key is a frozenset.
    """

    def __init__(self, prior: DirichletPrior = K2):
        self.prior = prior
        self._scores: dict = {}
        self.hits = 0
        self.misses = 0

    def score(self, ds: Dataset, child, parents=()) -> float:
        c = ds.names[ds.index(child)]
        ps = frozenset(ds.names[ds.index(p)] for p in parents)
        key = (c, ps)
        if key in self._scores:
            self.hits += 1
            return self._scores[key]
        self.misses += 1
        s = family_score(count_table(ds, c, sorted(ps)).counts, self.prior)
        self._scores[key] = s
        return s

    def __len__(self):
        return len(self._scores)


def family_table(ds: Dataset, prior: DirichletPrior = K2, cache: FamilyScoreCache | None = None) -> np.ndarray:
    """``F[v, mask]``: score of column v with parent columns ``mask``; -inf where v is in mask."""
    n = ds.n_vars
    if cache is not None and cache.prior != prior:
        raise ArgumentError("family cache was built for a different Dirichlet prior")
    out = np.full((n, 1 << n), -np.inf)
    for v in range(n):
        for mask in range(1 << n):
            if mask >> v & 1:
                continue
            pa = [u for u in range(n) if mask >> u & 1]
            if cache is not None:
                out[v, mask] = cache.score(ds, v, pa)
            else:
                out[v, mask] = family_score(count_table(ds, v, pa).counts, prior)
    return out


def batch_log_bd(ds: Dataset, parent_masks: np.ndarray, prior: DirichletPrior = K2, cache=None) -> np.ndarray:
    """Log BD score of many DAGs over all columns of ``ds`` (rows of parent masks)."""
    pm = np.asarray(parent_masks, dtype=np.int64)
    F = family_table(ds, prior, cache)
    n = ds.n_vars
    if pm.ndim != 2 or pm.shape[1] != n:
        raise ArgumentError(f"parent masks must be (G, {n})")
    return F[np.arange(n)[None, :], pm].sum(axis=1)


__all__ = [
    "CountTable",
    "DirichletPrior",
    "FamilyScoreCache",
    "K2",
    "batch_log_bd",
    "config_index",
    "count_table",
    "family_score",
    "family_table",
    "log_bd_score",
]
