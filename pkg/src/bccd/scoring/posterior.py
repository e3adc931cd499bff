"""Posterior over all DAGs on a small variable subset, and CI probabilities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs._batch import ci_lookup
from bccd.graphs.enumeration import MAX_ENUM_NODES, dag_fingerprints, dag_table
from bccd.scoring.bd import K2, DirichletPrior, FamilyScoreCache, batch_log_bd
from bccd.scoring.data import Dataset
from bccd.scoring.priors import StructurePrior, structure_prior_uniform


@dataclass(frozen=True, eq=False)
class StructurePosterior:
    level: int
    log_likelihoods: np.ndarray = field(repr=False)
    posterior: np.ndarray = field(repr=False)
    variables: tuple = ()

    def argmax(self) -> int:
        """Most probable canonical DAG index; ties go to the lowest index."""
        return int(np.argmax(self.posterior))

    def position(self, var) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise ArgumentError(f"{var!r} is not a variable of this posterior") from None


def structure_posterior(
    ds_sub: Dataset,
    prior: StructurePrior | None = None,
    dprior: DirichletPrior = K2,
    cache: FamilyScoreCache | None = None,
) -> StructurePosterior:
    """``p(g | D)`` for every canonical DAG on the columns of ``ds_sub`` (node i = column i)."""
    n = ds_sub.n_vars
    if not 1 <= n <= MAX_ENUM_NODES:
        raise CapacityError(f"posterior over all DAGs needs 1..{MAX_ENUM_NODES} variables, got {n}")
    prior = prior if prior is not None else structure_prior_uniform(n)
    if prior.level != n:
        raise ArgumentError(f"prior is for level {prior.level}, data has {n} variables")
    ll = batch_log_bd(ds_sub, dag_table(n), dprior, cache)
    with np.errstate(divide="ignore"):
        joint = ll + np.log(prior.weights)
    post = np.exp(joint - logsumexp(joint))
    post /= post.sum()
    ll.setflags(write=False)
    post.setflags(write=False)
    return StructurePosterior(n, ll, post, ds_sub.names)


def _query_column(level: int, x: int, y: int, z) -> int:
    zm = 0
    for v in z:
        zm |= 1 << v
    return ci_lookup(level)[(min(x, y), max(x, y), zm)]


def independence_probability(
    ds: Dataset,
    x,
    y,
    z=(),
    posterior: StructurePosterior | None = None,
    *,
    minimal_with=None,
    prior: StructurePrior | None = None,
    dprior: DirichletPrior = K2,
    cache: FamilyScoreCache | None = None,
) -> float:
    """Posterior probability that ``x _||_ y | z``.

    With ``minimal_with=w`` it is instead the probability of the minimal
    dependence ``x _||_ y | z`` and ``x not_||_ y | z + [w]``.

    Without a ``posterior`` one is computed over ``[x, y, *z(, w)]`` using
    ``prior`` (uniform by default).
    """
    names = [ds.names[ds.index(v)] for v in (x, y, *z)]
    if minimal_with is not None:
        names.append(ds.names[ds.index(minimal_with)])
    if len(set(names)) != len(names):
        raise ArgumentError("x, y, z (and the minimal-dependence variable) must be distinct")
    if len(names) > MAX_ENUM_NODES:
        raise CapacityError(f"at most {MAX_ENUM_NODES} variables per test, got {len(names)}")
    if posterior is None:
        posterior = structure_posterior(ds.subset(names), prior, dprior, cache)
    elif set(posterior.variables) != set(names):
        raise ArgumentError(f"posterior covers {posterior.variables}, test needs {tuple(names)}")
    pos = [posterior.position(v) for v in names]
    fp = dag_fingerprints(posterior.level)
    zs = pos[2 : 2 + len(z)]
    held = fp[:, _query_column(posterior.level, pos[0], pos[1], zs)]
    if minimal_with is not None:
        held = held & ~fp[:, _query_column(posterior.level, pos[0], pos[1], zs + [pos[-1]])]
    return float(posterior.posterior[held].sum())


__all__ = ["StructurePosterior", "independence_probability", "structure_posterior"]
