"""Command-line interface.

Exit codes: 0 ok, 2 bad input, 3 capacity exceeded, 4 internal invariant
violation. Every file written is accompanied by ``<file>.manifest.json``
recording the command, its configuration, input digests and versions;
manifests carry no timestamps, so equal inputs give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from bccd import __version__
from bccd.errors import ArgumentError, CapacityError, InvariantViolation
from bccd.graphs.core import Dag, Pag
from bccd.graphs.enumeration import dag_table
from bccd.graphs.textio import format_graph, parse_graph
from bccd.scoring.bd import K2, DirichletPrior
from bccd.scoring.data import format_csv, read_csv
from bccd.scoring.posterior import independence_probability
from bccd.scoring.priors import structure_prior_multilevel
from bccd.search.algorithm import (
    APPLIED,
    BccdConfig,
    DiscoveryResult,
    adjacency_search,
    discover,
    format_causal_matrix,
    format_log,
    map_to_pag,
    rank_and_infer,
)
from bccd.search.state import Status
from bccd.simgen.evaluate import (
    CATEGORIES,
    causal_accuracy,
    causal_decisions,
    confusion_matrix,
    evaluate,
    pag_accuracy,
)
from bccd.simgen.experiment import (
    Trial,
    format_confusion,
    format_manifest,
    format_results,
    make_trial,
    read_manifest,
    run_trial,
    summarize,
)
from bccd.simgen.generate import GroundTruth
from bccd.statements.mapping import (
    MAPPING_VERSION,
    build_mapping,
    default_mapping_path,
    dump_text,
    encode_mapping,
    get_mapping,
    load_mapping,
)

EXIT_OK, EXIT_INPUT, EXIT_CAPACITY, EXIT_INVARIANT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


# ----------------------------------------------------------------- helpers


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path, text: str | bytes, manifest: dict) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text, encoding="utf-8")
    side = path.with_name(path.name + ".manifest.json")
    side.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest(command: str, config: dict, inputs=(), seed=None) -> dict:
    return {
        "command": command,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "tool_version": __version__,
        "mapping_version": f"{MAPPING_VERSION:#x}",
        "seed": seed,
    }


def _dirichlet(args) -> DirichletPrior:
    return DirichletPrior.bdeu(args.bdeu) if args.bdeu is not None else K2


def _mapping(args, k_max: int):
    if getattr(args, "mapping", None):
        table = load_mapping(args.mapping)
        if table.k_max < k_max:
            raise CapacityError(f"mapping file covers {table.k_max} nodes, need {k_max}")
        return table
    return get_mapping(k_max)


def _named_graph(g, names) -> str:
    header = "# " + " ".join(f"{i}={n}" for i, n in enumerate(names)) + "\n"
    return header + format_graph(g)


def _causal_from_log(path, names) -> np.ndarray:
    """Causal matrix replayed from the applied pairwise entries of a decision log."""
    pos = {v: i for i, v in enumerate(names)}
    n = len(names)
    mc = np.zeros((n, n), dtype=np.int8)
    mc[np.arange(n), np.arange(n)] = Status.NOT_CAUSES
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["status"] != APPLIED or row["kind"] not in ("Cause", "NonCause"):
                continue
            z, x = row["vars"].split(";")
            if z not in pos or x not in pos:
                raise ArgumentError(f"{path}: unknown variable in {row['vars']!r}")
            mc[pos[z], pos[x]] = Status.CAUSES if row["kind"] == "Cause" else Status.NOT_CAUSES
    return mc


# ---------------------------------------------------------------- commands


def cmd_build_mapping(args) -> int:
    table = build_mapping(args.kmax)
    out = Path(args.out) if args.out else default_mapping_path(args.kmax)
    _write(out, encode_mapping(table), _manifest("build-mapping", {"kmax": args.kmax}))
    if args.text:
        _write(args.text, dump_text(table), _manifest("build-mapping", {"kmax": args.kmax}))
    print(f"mapping version {MAPPING_VERSION:#x} -> {out}")
    for n in range(1, table.k_max + 1):
        print(f"level {n}: {table.row_count(n)} rows")
    return EXIT_OK


def _config(args) -> BccdConfig:
    return BccdConfig(
        theta=args.theta,
        k_max=args.kmax,
        dirichlet=_dirichlet(args),
        prior=args.prior,
    )


def cmd_discover(args) -> int:
    ds = read_csv(args.data, args.schema)
    cfg = _config(args)
    k = min(cfg.k_max, max(ds.n_vars, 2))
    mapping = _mapping(args, k) if ds.n_vars >= 2 else None
    res = discover(ds, replace(cfg, k_max=k), mapping)
    inputs = [args.data] + ([args.schema] if args.schema else [])
    man = _manifest("discover", {"theta": cfg.theta, "kmax": k, "prior": cfg.prior, "dirichlet": cfg.dirichlet.kind, "ess": cfg.dirichlet.ess}, inputs)
    pag_text = _named_graph(res.pag, ds.names)
    if args.out_pag:
        _write(args.out_pag, pag_text, man)
    else:
        sys.stdout.write(pag_text)
    if args.out_log:
        _write(args.out_log, format_log(res.log), man)
    if args.out_matrix:
        _write(args.out_matrix, format_causal_matrix(res.causal_matrix, ds.names), man)
    return EXIT_OK


def cmd_test_independence(args) -> int:
    ds = read_csv(args.data, args.schema)
    given = [v for v in (args.given or "").split(",") if v.strip()]
    given = [v.strip() for v in given]
    k = 2 + len(given) + (args.minimal_dep is not None)
    if k > 5:
        raise CapacityError(f"at most 5 variables per test, got {k}")
    prior = structure_prior_multilevel(5)[k] if args.prior == "multilevel" else None
    p = independence_probability(
        ds, args.x, args.y, given, minimal_with=args.minimal_dep, prior=prior, dprior=_dirichlet(args)
    )
    print(f"p={p:.6f} structures={len(dag_table(k))}")
    return EXIT_OK


def _truth_files(d: Path, truth: GroundTruth, names, man) -> None:
    _write(d / "full_dag.txt", format_graph(truth.full_dag), man)
    _write(d / "truth_mag.txt", _named_graph(truth.true_mag, names), man)
    _write(d / "truth_pag.txt", _named_graph(truth.true_pag, names), man)
    info = {"observed": list(names), "hidden": sorted(truth.hidden), "observed_nodes": list(truth.observed)}
    _write(d / "truth.json", json.dumps(info, indent=2, sort_keys=True) + "\n", man)


def cmd_simulate(args) -> int:
    m = read_manifest(args.manifest)
    out = Path(args.out)
    for i in range(m.trials):
        s, truth, data = make_trial(m, i)
        d = out / f"trial_{i:03d}"
        man = _manifest("simulate", {"manifest": format_manifest(m), "trial": i}, [args.manifest], s)
        _write(d / "data.csv", format_csv(data), man)
        _truth_files(d, truth, data.names, man)
    print(f"{m.trials} trials -> {out}")
    return EXIT_OK


def _load_truth(d: Path) -> GroundTruth:
    info = json.loads((d / "truth.json").read_text(encoding="utf-8"))
    full = parse_graph((d / "full_dag.txt").read_text(encoding="utf-8"), Dag)
    return GroundTruth.from_dag(full, info["hidden"]), info["observed"]


def cmd_evaluate(args) -> int:
    truth_dir, pred_dir = Path(args.truth), Path(args.pred)
    trials = sorted(p for p in truth_dir.iterdir() if (p / "truth.json").exists())
    if not trials:
        raise ArgumentError(f"no trial directories with truth.json under {truth_dir}")
    rows = []
    for d in trials:
        truth, names = _load_truth(d)
        pd = pred_dir / d.name
        pag_path = pd / "pag.txt"
        if not pag_path.exists():
            raise ArgumentError(f"missing prediction {pag_path}")
        pag = parse_graph(pag_path.read_text(encoding="utf-8"), Pag)
        if pag.node_count != len(names):
            raise ArgumentError(f"{pag_path}: {pag.node_count} nodes, truth has {len(names)}")
        log_path = pd / "log.csv"
        mc = _causal_from_log(log_path, names) if log_path.exists() else None
        ca = causal_accuracy(mc, truth) if mc is not None else float("nan")
        dec = causal_decisions(mc) if mc is not None else 0
        conf = confusion_matrix(pag, truth.true_pag)
        rows.append([d.name, repr(pag_accuracy(pag, truth.true_pag)), repr(ca), dec] + conf.ravel().tolist())
    header = ["trial", "pag_accuracy", "causal_accuracy", "decisions"] + [f"c_{t}_{p}" for t in CATEGORIES for p in CATEGORIES]
    text = _csv([header] + rows)
    man = _manifest("evaluate", {"truth": str(truth_dir), "pred": str(pred_dir)})
    if args.out:
        _write(args.out, text, man)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _sweep_trial(job):
    """One trial at every theta; module-level so worker processes can run it."""
    m, i, fix_skeleton, skeleton_theta = job
    if not fix_skeleton:
        t = run_trial(m, i)
        return t.index, t.seed, t.reports
    s, truth, data = make_trial(m, i)
    k = min(m.k_max, max(2, m.nodes))
    cfg = BccdConfig(theta=skeleton_theta, k_max=k, prior=m.prior)
    skeleton, ledger, trace = adjacency_search(data, cfg, get_mapping(k))
    reports = {}
    for th in m.theta:
        lc, mc, log = rank_and_infer(ledger, th, data.names)
        res = DiscoveryResult(map_to_pag(skeleton, mc), mc, log, skeleton, ledger, lc, trace)
        reports[th] = evaluate(res, truth)
    return i, s, reports


def cmd_sweep(args) -> int:
    m = read_manifest(args.manifest)
    thetas = tuple(float(t) for t in args.thetas.split(",") if t.strip()) if args.thetas else m.theta
    m = replace(m, theta=thetas)
    jobs = [(m, i, args.fix_skeleton, args.skeleton_theta) for i in range(m.trials)]
    if args.jobs and args.jobs > 1:
        get_mapping(min(m.k_max, max(2, m.nodes)))  # build once before forking
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_trial, jobs))
    else:
        results = [_sweep_trial(j) for j in jobs]
    trials = [Trial(i, s, None, None, reports) for i, s, reports in results]
    man = _manifest(
        "sweep",
        {"manifest": format_manifest(m), "fix_skeleton": args.fix_skeleton, "skeleton_theta": args.skeleton_theta},
        [args.manifest],
        m.seed,
    )
    if args.out:
        _write(args.out, format_results(trials), man)
    print("theta  causal_acc  sem     pag_acc  decisions")
    for th in thetas:
        p = summarize(trials, th)
        print(f"{th:<6} {p.mean_causal_accuracy:.4f}      {p.sem_causal_accuracy:.4f}  {p.mean_pag_accuracy:.4f}   {p.mean_decisions:.2f}")
    if args.confusion:
        print(format_confusion(summarize(trials, thetas[-1]).confusion), end="")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bccd", description="Bayesian constraint-based causal discovery")
    p.add_argument(
        "--version", action="version", version=f"bccd {__version__} (mapping format {MAPPING_VERSION:#x})"
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-mapping", help="precompute the uDAG -> statements table")
    b.add_argument("--kmax", type=int, default=5)
    b.add_argument("--out", help="cache file (default: user cache directory)")
    b.add_argument("--text", help="also write a human-readable dump")
    b.set_defaults(func=cmd_build_mapping)

    def scoring_opts(q):
        q.add_argument("--data", required=True, help="CSV data file")
        q.add_argument("--schema", help="optional category schema file")
        q.add_argument("--prior", choices=("uniform", "multilevel"), default="uniform")
        q.add_argument("--bdeu", type=float, metavar="ESS", help="use BDeu with this equivalent sample size (default K2)")

    d = sub.add_parser("discover", help="run the search on a data set")
    scoring_opts(d)
    d.add_argument("--theta", type=float, default=0.5)
    d.add_argument("--kmax", type=int, default=5)
    d.add_argument("--mapping", help="mapping cache file")
    d.add_argument("--out-pag")
    d.add_argument("--out-log")
    d.add_argument("--out-matrix")
    d.set_defaults(func=cmd_discover)

    t = sub.add_parser("test-independence", help="posterior probability of one (in)dependence")
    scoring_opts(t)
    t.add_argument("--x", required=True)
    t.add_argument("--y", required=True)
    t.add_argument("--given", default="", help="comma-separated conditioning variables")
    t.add_argument("--minimal-dep", help="variable whose addition should break the independence")
    t.set_defaults(func=cmd_test_independence)

    s = sub.add_parser("simulate", help="generate ground truths and data sets")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="score predicted PAGs against simulated truths")
    e.add_argument("--truth", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", help="accuracy across decision thresholds")
    w.add_argument("--manifest", required=True)
    w.add_argument("--thetas", help="comma-separated thresholds (default: manifest theta)")
    w.add_argument("--out")
    w.add_argument(
        "--fix-skeleton",
        action="store_true",
        help="run stage 1 once (at --skeleton-theta) and only stage 2 per threshold; an approximation",
    )
    w.add_argument("--skeleton-theta", type=float, default=0.5)
    w.add_argument("--jobs", type=int, default=1, help="worker processes")
    w.add_argument("--confusion", action="store_true", help="print the pooled confusion matrix at the last threshold")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
