"""Simulation experiments driven by a key=value manifest.

Manifest keys (defaults in ``Manifest``)::

    nodes=6          observed variables
    hidden=1-2       hidden confounders per model: a count or a range lo-hi
    rows=1000        records per data set
    trials=30
    theta=0.5        one value, or a comma list for sweeps
    seed=0
    density=0.3      edge probability of the observed DAG
    max_degree=3
    alpha=1.0        Dirichlet parameter of CPT rows
    arity=2
    k_max=5
    prior=uniform

Trial ``i`` uses seed ``seed XOR h(i)`` with ``h`` the first 8 bytes of
``sha256("trial:<i>")``; its graph, CPT and data streams are spawned from
that seed, so any single trial can be replayed on its own.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from bccd.errors import ArgumentError
from bccd.scoring.bd import FamilyScoreCache
from bccd.search.algorithm import BccdConfig, discover
from bccd.simgen.evaluate import CATEGORIES, EvalReport, evaluate
from bccd.simgen.generate import drop_columns, random_cpts, random_ground_truth, sample_dataset


@dataclass(frozen=True)
class Manifest:
    nodes: int = 6
    hidden: tuple = (1, 2)
    rows: int = 1000
    trials: int = 30
    theta: tuple = (0.5,)
    seed: int = 0
    density: float = 0.3
    max_degree: int = 3
    alpha: float = 1.0
    arity: int = 2
    k_max: int = 5
    prior: str = "uniform"

    def __post_init__(self):
        lo, hi = self.hidden
        if not 0 <= lo <= hi:
            raise ArgumentError(f"bad hidden range {self.hidden}")
        if self.nodes < 1 or self.rows < 0 or self.trials < 0:
            raise ArgumentError("nodes must be >= 1, rows and trials >= 0")
        if not self.theta or any(not 0 < t <= 1 for t in self.theta):
            raise ArgumentError("theta values must lie in (0, 1]")
        if self.arity < 2:
            raise ArgumentError("arity must be at least 2")


def _parse_value(key: str, raw: str):
    try:
        if key == "hidden":
            lo, _, hi = raw.partition("-")
            return (int(lo), int(hi or lo))
        if key == "theta":
            return tuple(float(t) for t in raw.split(",") if t.strip())
        if key in ("density", "alpha"):
            return float(raw)
        if key == "prior":
            return raw
        return int(raw)
    except ValueError:
        raise ArgumentError(f"bad value for {key}: {raw!r}") from None


def parse_manifest(text: str) -> Manifest:
    known = {f.name for f in fields(Manifest)}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (t.strip() for t in line.partition("="))
        if not sep:
            raise ArgumentError(f"manifest line {lineno}: expected key=value")
        if key not in known:
            raise ArgumentError(f"manifest line {lineno}: unknown key {key!r}")
        kw[key] = _parse_value(key, val)
    return Manifest(**kw)


def read_manifest(path) -> Manifest:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))


def format_manifest(m: Manifest) -> str:
    lines = []
    for f in fields(Manifest):
        v = getattr(m, f.name)
        if f.name == "hidden":
            v = f"{v[0]}-{v[1]}" if v[0] != v[1] else str(v[0])
        elif f.name == "theta":
            v = ",".join(repr(t) for t in v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def trial_seed(seed: int, trial: int) -> int:
    h = int.from_bytes(hashlib.sha256(f"trial:{trial}".encode()).digest()[:8], "little")
    return (int(seed) ^ h) & 0xFFFF_FFFF_FFFF_FFFF


@dataclass
class Trial:
    index: int
    seed: int
    truth: object
    data: object
    reports: dict = field(default_factory=dict)  # theta -> EvalReport
    results: dict = field(default_factory=dict)  # theta -> DiscoveryResult


def make_trial(m: Manifest, index: int):
    """Ground truth and observed data of one trial."""
    s = trial_seed(m.seed, index)
    g_rng, p_rng, d_rng = (np.random.default_rng(c) for c in np.random.SeedSequence(s).spawn(3))
    lo, hi = m.hidden
    n_hidden = int(g_rng.integers(lo, hi + 1))
    if m.nodes < 2:
        n_hidden = 0
    truth = random_ground_truth(m.nodes, n_hidden, m.density, m.max_degree, g_rng)
    total = truth.full_dag.node_count
    bn = random_cpts(truth.full_dag, (m.arity,) * total, m.alpha, p_rng)
    names = [f"X{v}" for v in range(m.nodes)] + [f"H{h}" for h in range(n_hidden)]
    full = sample_dataset(bn, m.rows, d_rng, names)
    data = drop_columns(full, names[m.nodes :])
    return s, truth, data


def run_trial(m: Manifest, index: int, mapping=None, keep_results: bool = False) -> Trial:
    s, truth, data = make_trial(m, index)
    t = Trial(index, s, truth, data)
    cache = FamilyScoreCache()
    for theta in m.theta:
        cfg = BccdConfig(theta=theta, k_max=min(m.k_max, max(2, m.nodes)), prior=m.prior)
        res = discover(data, cfg, mapping, cache)
        t.reports[theta] = evaluate(res, truth)
        if keep_results:
            t.results[theta] = res
    return t


def run_experiment(m: Manifest, mapping=None, progress=None) -> list[Trial]:
    out = []
    for i in range(m.trials):
        out.append(run_trial(m, i, mapping))
        if progress:
            progress(i + 1, m.trials)
    return out


RESULT_COLUMNS = ("trial", "seed", "theta", "pag_accuracy", "causal_accuracy", "decisions") + tuple(
    f"c_{t}_{p}" for t in CATEGORIES for p in CATEGORIES
)


def format_results(trials) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for t in trials:
        for theta, r in t.reports.items():
            w.writerow(
                [t.index, t.seed, repr(theta), repr(r.pag_accuracy), repr(r.causal_accuracy), r.decisions]
                + r.confusion.ravel().tolist()
            )
    return buf.getvalue()


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    mean_causal_accuracy: float
    sem_causal_accuracy: float
    mean_pag_accuracy: float
    mean_decisions: float
    confusion: np.ndarray


def summarize(trials, theta: float) -> SweepPoint:
    reps: list[EvalReport] = [t.reports[theta] for t in trials]
    ca = np.array([r.causal_accuracy for r in reps])
    sem = float(ca.std(ddof=1) / np.sqrt(len(ca))) if len(ca) > 1 else 0.0
    return SweepPoint(
        theta,
        float(ca.mean()),
        sem,
        float(np.mean([r.pag_accuracy for r in reps])),
        float(np.mean([r.decisions for r in reps])),
        sum((r.confusion for r in reps), np.zeros((4, 4), dtype=np.int64)),
    )


def sweep(m: Manifest, thetas=(0.9, 0.7, 0.5), mapping=None, progress=None) -> list[SweepPoint]:
    trials = run_experiment(replace(m, theta=tuple(thetas)), mapping, progress)
    return [summarize(trials, th) for th in thetas]


def format_confusion(conf: np.ndarray, normalize: bool = True) -> str:
    c = np.asarray(conf, dtype=np.float64)
    if normalize and c.sum():
        c = c / c.sum() * 100
    width = max(len(x) for x in CATEGORIES) + 2
    lines = ["true \\ out".ljust(width) + "".join(x.rjust(width) for x in CATEGORIES)]
    for name, row in zip(CATEGORIES, c):
        lines.append(name.ljust(width) + "".join(f"{v:{width}.1f}" for v in row))
    return "\n".join(lines) + "\n"


__all__ = [
    "Manifest",
    "RESULT_COLUMNS",
    "SweepPoint",
    "Trial",
    "format_confusion",
    "format_manifest",
    "format_results",
    "make_trial",
    "parse_manifest",
    "read_manifest",
    "run_experiment",
    "run_trial",
    "summarize",
    "sweep",
    "trial_seed",
]
