"""Random causal models, discrete sampling and hidden-variable ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bccd.errors import ArgumentError, GenerationError
from bccd.graphs.core import Dag, Mag, Pag
from bccd.graphs.enumeration import markov_equivalence_class
from bccd.graphs.separation import latent_project, pag_of
from bccd.scoring.bd import config_index
from bccd.scoring.data import Dataset

REJECTION_BUDGET = 10_000


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_dag(n: int, max_degree: int | None = None, edge_density: float = 0.3, seed=None) -> Dag:
    """Random order, then each forward pair gets an edge with probability ``edge_density``.

    Draws whose maximum degree (in + out) exceeds ``max_degree`` are
    rejected and redrawn.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ArgumentError(f"n must be a positive int, got {n!r}")
    if not 0.0 < edge_density < 1.0:
        raise ArgumentError(f"edge_density must lie in (0, 1), got {edge_density}")
    rng = _rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(REJECTION_BUDGET):
        order = rng.permutation(n)
        keep = rng.random(len(iu[0])) < edge_density
        src, dst = order[iu[0][keep]], order[iu[1][keep]]
        if max_degree is not None:
            deg = np.bincount(np.concatenate([src, dst]), minlength=n)
            if deg.max(initial=0) > max_degree:
                continue
        return Dag(int(n), frozenset(zip(src.tolist(), dst.tolist())))
    raise GenerationError(f"no DAG with max degree {max_degree} after {REJECTION_BUDGET} draws")


@dataclass(frozen=True, eq=False)
class DiscreteBayesNet:
    """DAG plus one CPT per node.

    ``cpts[v]`` has shape ``(q_v, r_v)``; row ``j`` is the parent
    configuration in mixed radix over the parents in increasing node
    order, first parent most significant (as in ``count_table``).
    """

    dag: Dag
    arities: tuple
    cpts: tuple = field(repr=False)

    def __post_init__(self):
        n = self.dag.node_count
        if len(self.arities) != n or len(self.cpts) != n:
            raise ArgumentError("one arity and one CPT per node required")
        for v in range(n):
            q = int(np.prod([self.arities[u] for u in self.parents(v)], dtype=np.int64))
            t = np.asarray(self.cpts[v], dtype=np.float64)
            if t.shape != (q, self.arities[v]):
                raise ArgumentError(f"CPT of node {v} must be {(q, self.arities[v])}, got {t.shape}")
            if (t < 0).any() or np.abs(t.sum(axis=1) - 1).max(initial=0) > 1e-12:
                raise ArgumentError(f"CPT rows of node {v} must be distributions")

    def parents(self, v: int) -> list[int]:
        pm = self.dag.parent_masks[v]
        return [u for u in range(self.dag.node_count) if pm >> u & 1]

    def joint(self) -> np.ndarray:
        """Full joint table (only for small nets), axes in node order."""
        n = self.dag.node_count
        out = np.ones(self.arities)
        for v in range(n):
            pa = self.parents(v)
            grids = np.indices(self.arities).reshape(n, -1).T
            j = config_index(grids[:, pa], [self.arities[u] for u in pa])
            out *= self.cpts[v][j, grids[:, v]].reshape(self.arities)
        return out


def random_cpts(dag: Dag, arities=None, alpha: float = 1.0, seed=None) -> DiscreteBayesNet:
    """Each CPT row drawn from a symmetric Dirichlet(alpha)."""
    if not alpha > 0:
        raise ArgumentError("alpha must be positive")
    n = dag.node_count
    arities = tuple(arities) if arities is not None else (2,) * n
    rng = _rng(seed)
    cpts = []
    for v in range(n):
        pm = dag.parent_masks[v]
        q = int(np.prod([arities[u] for u in range(n) if pm >> u & 1], dtype=np.int64))
        t = rng.dirichlet(np.full(arities[v], alpha), size=q)
        # exact normalization so rows sum to 1 within rounding
        t /= t.sum(axis=1, keepdims=True)
        cpts.append(t)
    return DiscreteBayesNet(dag, arities, tuple(cpts))


def conditional_mutual_information(joint: np.ndarray, x: int, y: int, z=()) -> float:
    """I(X;Y|Z) in nats from a full joint table."""
    z = sorted(z)
    keep = sorted({x, y, *z})
    drop = tuple(a for a in range(joint.ndim) if a not in keep)
    p = joint.sum(axis=drop) if drop else joint
    ix, iy = keep.index(x), keep.index(y)
    iz = tuple(keep.index(a) for a in z)
    pxz = p.sum(axis=iy, keepdims=True)
    pyz = p.sum(axis=ix, keepdims=True)
    pz = pxz.sum(axis=ix, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = p * np.log(p * pz / (pxz * pyz))
    return float(np.nansum(t))


def dependence_margin(bn: DiscreteBayesNet) -> float:
    """Smallest I(X;Y|Z) over every dependence the DAG entails.

    A positive margin means the distribution is faithful to ``bn.dag``;
    larger margins make the dependencies easier to detect from samples.
    """
    from bccd.graphs.separation import d_separated

    n = bn.dag.node_count
    joint = bn.joint()
    best = np.inf
    for x in range(n):
        for y in range(x + 1, n):
            rest = [v for v in range(n) if v not in (x, y)]
            for zm in range(1 << len(rest)):
                z = [rest[i] for i in range(len(rest)) if zm >> i & 1]
                if not d_separated(bn.dag, x, y, z):
                    best = min(best, conditional_mutual_information(joint, x, y, z))
    return float(best)


def random_faithful_bn(
    dag: Dag, margin: float, arities=None, alpha: float = 1.0, seed=None, budget: int = REJECTION_BUDGET
) -> DiscreteBayesNet:
    """Rejection-sample CPTs until ``dependence_margin`` reaches ``margin``."""
    rng = _rng(seed)
    for _ in range(budget):
        bn = random_cpts(dag, arities, alpha, rng)
        if dependence_margin(bn) >= margin:
            return bn
    raise GenerationError(f"no CPTs with dependence margin {margin} after {budget} draws")


def _topological(dag: Dag) -> list[int]:
    n = dag.node_count
    anc = dag.ancestor_masks
    return sorted(range(n), key=lambda v: (bin(anc[v]).count("1"), v))


def sample_dataset(bn: DiscreteBayesNet, n_rows: int, seed=None, names=None) -> Dataset:
    """Ancestral sampling, one inverse-CDF draw per node and row."""
    if n_rows < 0:
        raise ArgumentError("n_rows must be non-negative")
    rng = _rng(seed)
    n = bn.dag.node_count
    vals = np.zeros((n_rows, n), dtype=np.int64)
    for v in _topological(bn.dag):
        pa = bn.parents(v)
        j = config_index(vals[:, pa], [bn.arities[u] for u in pa])
        cdf = np.cumsum(bn.cpts[v], axis=1)[j]
        u = rng.random(n_rows)
        vals[:, v] = np.minimum((cdf < u[:, None]).sum(axis=1), bn.arities[v] - 1)
    names = tuple(names) if names is not None else tuple(f"V{v}" for v in range(n))
    return Dataset(names, bn.arities, vals)


def drop_columns(ds: Dataset, hidden) -> Dataset:
    return ds.drop(hidden) if hidden else ds


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Full model over observed + hidden nodes; observed nodes come first."""

    full_dag: Dag
    hidden: frozenset
    true_mag: Mag
    true_pag: Pag

    @property
    def observed(self) -> tuple:
        return tuple(v for v in range(self.full_dag.node_count) if v not in self.hidden)

    @classmethod
    def from_dag(cls, dag: Dag, hidden=()) -> "GroundTruth":
        hidden = frozenset(hidden)
        obs = [v for v in range(dag.node_count) if v not in hidden]
        if not obs:
            raise ArgumentError("at least one node must be observed")
        mag = latent_project(dag, obs)
        return cls(dag, hidden, mag, pag_of(markov_equivalence_class(mag)))

    def ancestor_matrix(self) -> np.ndarray:
        """``A[i, j]``: observed i is a proper ancestor of observed j in the full DAG."""
        obs = self.observed
        anc = self.full_dag.ancestor_masks
        return np.array([[i != j and bool(anc[b] >> a & 1) for j, b in enumerate(obs)] for i, a in enumerate(obs)])


def random_ground_truth(
    n_observed: int,
    n_hidden: int = 0,
    edge_density: float = 0.3,
    max_degree: int | None = 3,
    seed=None,
) -> GroundTruth:
    """Random DAG over the observed nodes plus hidden root confounders.

    Hidden node ``n_observed + h`` gets two distinct observed children
    drawn uniformly, so it always leaves a trace in the projection.
    """
    if n_hidden and n_observed < 2:
        raise ArgumentError("hidden confounders need at least two observed nodes")
    rng = _rng(seed)
    base = random_dag(n_observed, max_degree, edge_density, rng)
    edges = set(base.edges)
    for h in range(n_hidden):
        for c in rng.choice(n_observed, size=2, replace=False):
            edges.add((n_observed + h, int(c)))
    full = Dag(n_observed + n_hidden, frozenset(edges))
    return GroundTruth.from_dag(full, range(n_observed, n_observed + n_hidden))


__all__ = [
    "DiscreteBayesNet",
    "GroundTruth",
    "conditional_mutual_information",
    "dependence_margin",
    "drop_columns",
    "random_cpts",
    "random_faithful_bn",
    "random_dag",
    "random_ground_truth",
    "sample_dataset",
]
