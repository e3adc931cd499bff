"""Accuracy metrics against a ground truth.

Endpoint positions: for every ordered pair (a, b) with a != b the position
holds the mark at ``b`` on edge ``a *-* b``, or ``absent`` when a and b are
not adjacent. A graph on n nodes therefore has n(n-1) positions and an
absent edge contributes two ``absent`` positions.

Mark categories, in confusion-matrix order: absent, arrowhead, tail, circle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bccd.errors import ArgumentError
from bccd.graphs.core import Mark, MixedGraph
from bccd.search.state import Status
from bccd.statements.core import CausalStatement, Kind

CATEGORIES = ("absent", "arrowhead", "tail", "circle")
_CODE = {None: 0, Mark.ARROW: 1, Mark.TAIL: 2, Mark.CIRCLE: 3}


def endpoint_codes(g: MixedGraph) -> np.ndarray:
    """``(n, n)`` category codes per ordered position; diagonal is -1."""
    n = g.node_count
    out = np.full((n, n), -1, dtype=np.int64)
    for a in range(n):
        for b in range(n):
            if a != b:
                out[a, b] = _CODE[g.mark_at(b, a)]
    return out


def _pair(predicted: MixedGraph, truth: MixedGraph):
    if predicted.node_count != truth.node_count:
        raise ArgumentError(f"graphs have {predicted.node_count} and {truth.node_count} nodes")
    off = ~np.eye(truth.node_count, dtype=bool)
    return endpoint_codes(predicted)[off], endpoint_codes(truth)[off]


def confusion_matrix(predicted: MixedGraph, truth: MixedGraph) -> np.ndarray:
    """4x4 counts; rows are the true category, columns the predicted one."""
    p, t = _pair(predicted, truth)
    return np.bincount(t * 4 + p, minlength=16).reshape(4, 4)


def pag_accuracy(predicted: MixedGraph, truth: MixedGraph) -> float:
    p, t = _pair(predicted, truth)
    return float((p == t).mean()) if len(t) else 1.0


def causal_accuracy(mc: np.ndarray, truth) -> float:
    """Share of decided off-diagonal causal-matrix entries that are correct; 1.0 if none."""
    anc = truth.ancestor_matrix()
    mc = np.asarray(mc)
    if mc.shape != anc.shape:
        raise ArgumentError(f"causal matrix is {mc.shape}, truth has {anc.shape[0]} observed nodes")
    off = ~np.eye(len(anc), dtype=bool)
    cause = (mc == Status.CAUSES) & off
    non = (mc == Status.NOT_CAUSES) & off
    decided = int(cause.sum() + non.sum())
    if decided == 0:
        return 1.0
    correct = int((cause & anc).sum() + (non & ~anc).sum())
    return correct / decided


def causal_decisions(mc: np.ndarray) -> int:
    mc = np.asarray(mc)
    off = ~np.eye(len(mc), dtype=bool)
    return int(((mc != Status.UNKNOWN) & off).sum())


def statement_true(s: CausalStatement, truth, names) -> bool:
    """Whether a statement over observed variable ``names`` holds in the truth."""
    pos = {v: i for i, v in enumerate(names)}
    anc = truth.ancestor_matrix()
    if s.kind == Kind.NON_ADJACENT:
        return not truth.true_mag.adjacent(pos[s.x], pos[s.y])
    z, x = pos[s.z], pos[s.x]
    if s.kind == Kind.NON_CAUSE:
        return not anc[z, x]
    if s.kind == Kind.CAUSE:
        return bool(anc[z, x])
    return bool(anc[z, x] or anc[z, pos[s.y]])


@dataclass(frozen=True)
class EvalReport:
    pag_accuracy: float
    causal_accuracy: float
    confusion: np.ndarray
    decisions: int


def evaluate(result, truth) -> EvalReport:
    """Score a discovery result (PAG + causal matrix) against a ground truth."""
    return EvalReport(
        pag_accuracy(result.pag, truth.true_pag),
        causal_accuracy(result.causal_matrix, truth),
        confusion_matrix(result.pag, truth.true_pag),
        causal_decisions(result.causal_matrix),
    )


__all__ = [
    "CATEGORIES",
    "EvalReport",
    "causal_accuracy",
    "causal_decisions",
    "confusion_matrix",
    "endpoint_codes",
    "evaluate",
    "pag_accuracy",
    "statement_true",
]
