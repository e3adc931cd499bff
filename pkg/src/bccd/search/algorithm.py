"""Two-stage search: subset scoring into a statement ledger, then ranked logic."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs.core import Mark, Pag
from bccd.graphs.enumeration import MAX_ENUM_NODES, dag_table
from bccd.scoring.bd import K2, DirichletPrior, FamilyScoreCache
from bccd.scoring.data import Dataset
from bccd.scoring.posterior import structure_posterior
from bccd.scoring.priors import StructurePrior, structure_prior_multilevel, structure_prior_uniform
from bccd.search.state import CausalLogicMatrix, Skeleton, StatementLedger, Status, causal_logic_closure
from bccd.statements.core import CausalStatement, Kind, statement_space
from bccd.statements.mapping import MappingTable, get_mapping

APPLIED = "applied"
SKIPPED = "skipped-conflict"
BELOW = "below-threshold"

KIND_NAMES = {
    Kind.NON_ADJACENT: "NonAdjacent",
    Kind.NON_CAUSE: "NonCause",
    Kind.DISJUNCTIVE: "DisjunctiveCause",
    Kind.CAUSE: "Cause",
}


@dataclass(frozen=True)
class BccdConfig:
    theta: float = 0.5
    k_max: int = 5
    dirichlet: DirichletPrior = K2
    prior: str = "uniform"  # or "multilevel"
    prior_level: int = 5

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ArgumentError(f"theta must lie in (0, 1], got {self.theta}")
        if not isinstance(self.k_max, int) or not 2 <= self.k_max <= MAX_ENUM_NODES:
            raise CapacityError(f"k_max must be in 2..{MAX_ENUM_NODES}, got {self.k_max!r}")
        if self.prior not in ("uniform", "multilevel"):
            raise ArgumentError(f"unknown structure prior {self.prior!r}")
        if self.prior == "multilevel" and not self.k_max <= self.prior_level <= MAX_ENUM_NODES:
            raise ArgumentError(f"prior_level must be in {self.k_max}..{MAX_ENUM_NODES}")

    def structure_priors(self) -> dict[int, StructurePrior]:
        if self.prior == "uniform":
            return {m: structure_prior_uniform(m) for m in range(1, self.k_max + 1)}
        return structure_prior_multilevel(self.prior_level)


# ------------------------------------------------------------------ stage 1


@lru_cache(maxsize=None)
def _pair_absent(n: int) -> np.ndarray:
    """``(G, pairs)`` float: 1 where pair (a < b) is non-adjacent in the canonical DAG."""
    pa = dag_table(n)
    cols = [((pa[:, b] >> a) & 1 == 0) & ((pa[:, a] >> b) & 1 == 0) for a, b in combinations(range(n), 2)]
    return np.stack(cols, axis=1).astype(np.float64)


def score_subset(
    ds: Dataset,
    w,
    mapping: MappingTable,
    priors: dict,
    ledger: StatementLedger,
    skeleton: Skeleton,
    theta: float = 0.5,
    dprior: DirichletPrior = K2,
    cache: FamilyScoreCache | None = None,
):
    """Score one variable subset: update the ledger by max, prune the skeleton.

    Variables are ordered by dataset column, so slot ``i`` of every
    mapping row is the ``i``-th of them.
    """
    cols = sorted({ds.index(v) for v in w})
    n = len(cols)
    if not 2 <= n <= mapping.k_max:
        raise CapacityError(f"subset size must be in 2..{mapping.k_max}, got {n}")
    names = [ds.names[c] for c in cols]
    post = structure_posterior(ds.subset(names), priors[n], dprior, cache).posterior
    rows = mapping.level_rows(n)
    used = np.flatnonzero(rows.any(axis=0))
    probs = np.clip(post @ rows[:, used], 0.0, 1.0)
    space = statement_space(n)
    for i, p in zip(used, probs):
        ledger.update(space[i].relabel(names), p)
    absent = post @ _pair_absent(n)
    for (a, b), p in zip(combinations(range(n), 2), absent):
        if p > theta:
            skeleton.remove(names[a], names[b])
    return ledger, skeleton


@dataclass
class SearchTrace:
    """Subsets scored, level by level, in processing order."""

    levels: list

    @property
    def subsets(self) -> list:
        return [w for lvl in self.levels for w in lvl]


def adjacency_search(ds: Dataset, cfg: BccdConfig | None = None, mapping: MappingTable | None = None, cache=None):
    """Stage 1. Returns (skeleton, ledger, trace).

    Each conditioning size K is a barrier: the subsets of level K are
    chosen from the skeleton as it stood when the level started, then all
    scored. Edge removals and ledger maxima commute, so the result does not
    depend on the order within a level.
    """
    cfg = cfg or BccdConfig()
    names = ds.names
    skeleton = Skeleton.complete(names)
    ledger = StatementLedger()
    levels = []
    if len(names) < 2:
        return skeleton, ledger, SearchTrace(levels)
    mapping = mapping if mapping is not None else get_mapping(cfg.k_max)
    if mapping.k_max < min(cfg.k_max, len(names)):
        raise CapacityError(f"mapping covers {mapping.k_max} nodes, config asks for {cfg.k_max}")
    priors = cfg.structure_priors()
    cache = cache if cache is not None else FamilyScoreCache(cfg.dirichlet)
    processed = set()
    pos = {v: i for i, v in enumerate(names)}
    for K in range(0, cfg.k_max - 1):
        snap = skeleton.copy()
        batch = []
        enough = False
        for x in names:
            adj = snap.neighbors(x)
            for y in adj:
                pool = [v for v in adj if v != y]
                if len(pool) < K:
                    continue
                enough = True
                for z in combinations(pool, K):
                    key = tuple(sorted((x, y, *z), key=pos.__getitem__))
                    if key in processed:
                        continue
                    processed.add(key)
                    batch.append(key)
        if not enough:
            break
        for key in batch:
            score_subset(ds, key, mapping, priors, ledger, skeleton, cfg.theta, cfg.dirichlet, cache)
        levels.append(batch)
    return skeleton, ledger, SearchTrace(levels)


# ------------------------------------------------------------------ stage 2


@dataclass(frozen=True)
class Decision:
    rank: int
    probability: float | None  # None for statements derived by closure
    statement: CausalStatement
    status: str

    @property
    def derived(self) -> bool:
        return self.probability is None


def _tie_key(s: CausalStatement, pos: dict):
    return (int(s.kind),) + tuple(pos[v] for v in s.variables)


def _pairwise(lc: CausalLogicMatrix) -> set:
    out = set()
    n = len(lc.names)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if lc.C[i, j]:
                out.add(CausalStatement(Kind.CAUSE, lc.names[i], lc.names[j]))
            elif lc.N[i, j]:
                out.add(CausalStatement(Kind.NON_CAUSE, lc.names[i], lc.names[j]))
    return out


def rank_and_infer(ledger: StatementLedger, theta: float = 0.5, names=None):
    """Stage 2. Returns (logic matrix, causal matrix, decision log).

    Statements are taken by decreasing probability (ties: statement kind,
    then variable positions in ``names``) while the probability strictly
    exceeds ``theta``. Pairwise causal facts that closure adds are logged
    right after the statement that produced them, without a probability.
    Everything not processed is logged as below-threshold.
    """
    if names is None:
        names = sorted({v for s, _ in ledger.items() for v in s.variables}, key=str)
    pos = {v: i for i, v in enumerate(names)}
    lc = CausalLogicMatrix(names)
    order = sorted(ledger.items(), key=lambda kv: (-kv[1], _tie_key(kv[0], pos)))
    log = []
    known = _pairwise(lc)
    rank = 0
    for s, p in order:
        rank += 1
        if not p > theta:
            log.append(Decision(rank, p, s, BELOW))
            continue
        status = causal_logic_closure(lc, s)
        log.append(Decision(rank, p, s, status))
        if status == APPLIED and s.kind != Kind.NON_ADJACENT:
            now = _pairwise(lc)
            for d in sorted(now - known - {s}, key=lambda t: _tie_key(t, pos)):
                log.append(Decision(rank, None, d, APPLIED))
            known = now
    return lc, lc.causal_matrix(), log


def map_to_pag(skeleton: Skeleton, mc: np.ndarray) -> Pag:
    """Edge marks from the causal matrix: tail at X when X causes Y,
    arrowhead when X does not, circle when unknown."""
    pos = {v: i for i, v in enumerate(skeleton.names)}

    def mark(i, j):
        if mc[i, j] == Status.CAUSES:
            return Mark.TAIL
        if mc[i, j] == Status.NOT_CAUSES:
            return Mark.ARROW
        return Mark.CIRCLE

    marks = {}
    for a, b in skeleton.edges:
        i, j = pos[a], pos[b]
        marks[(i, j)] = (mark(i, j), mark(j, i))
    return Pag(len(skeleton.names), marks)


@dataclass
class DiscoveryResult:
    pag: Pag
    causal_matrix: np.ndarray
    log: list
    skeleton: Skeleton
    ledger: StatementLedger
    logic: CausalLogicMatrix
    trace: SearchTrace

    @property
    def names(self) -> tuple:
        return self.skeleton.names

    def applied(self) -> list:
        return [d.statement for d in self.log if d.status == APPLIED and not d.derived]


def discover(
    ds: Dataset,
    cfg: BccdConfig | None = None,
    mapping: MappingTable | None = None,
    cache: FamilyScoreCache | None = None,
) -> DiscoveryResult:
    """Both stages end to end. A ``cache`` may be shared between runs on the same data."""
    cfg = cfg or BccdConfig()
    skeleton, ledger, trace = adjacency_search(ds, cfg, mapping, cache)
    lc, mc, log = rank_and_infer(ledger, cfg.theta, ds.names)
    return DiscoveryResult(map_to_pag(skeleton, mc), mc, log, skeleton, ledger, lc, trace)


# ------------------------------------------------------------------ output

LOG_COLUMNS = ("rank", "probability", "kind", "vars", "status")


def format_log(log) -> str:
    """Decision log as CSV; derived entries have an empty probability."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for d in log:
        p = "" if d.probability is None else repr(float(d.probability))
        w.writerow([d.rank, p, KIND_NAMES[d.statement.kind], ";".join(map(str, d.statement.variables)), d.status])
    return buf.getvalue()


def write_log(log, path) -> None:
    Path(path).write_text(format_log(log), encoding="utf-8")


def format_causal_matrix(mc: np.ndarray, names) -> str:
    sym = {Status.UNKNOWN: "?", Status.CAUSES: "=>", Status.NOT_CAUSES: "=/=>"}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["", *names])
    for i, a in enumerate(names):
        w.writerow([a, *(sym[Status(int(v))] for v in mc[i])])
    return buf.getvalue()


__all__ = [
    "APPLIED",
    "BELOW",
    "BccdConfig",
    "Decision",
    "DiscoveryResult",
    "SKIPPED",
    "adjacency_search",
    "discover",
    "format_causal_matrix",
    "format_log",
    "map_to_pag",
    "rank_and_infer",
    "score_subset",
    "write_log",
]
