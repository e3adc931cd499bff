"""Separation criteria, latent projection and equivalence machinery."""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs.core import (
    CiStatement,
    Dag,
    Mag,
    Mark,
    MixedGraph,
    Pag,
    as_mixed,
    check_query,
    mask_nodes,
    to_mask,
)

FINGERPRINT_MAX_NODES = 6


def _incident(g: MixedGraph):
    """Per node: list of (neighbour, mark at node, mark at neighbour)."""
    inc = [[] for _ in range(g.node_count)]
    for a, b, ma, mb in g.edges:
        inc[a].append((b, ma, mb))
        inc[b].append((a, mb, ma))
    return inc


def _reachable(g: MixedGraph, x: int, zmask: int) -> int:
    """Bitmask of nodes m-connected to ``x`` given ``zmask``.

    Walk-based search over states (node, arrowhead-in). A collider may be
    passed when it is an ancestor of the conditioning set; a non-collider
    when it is not conditioned on.
    """
    anc = g.ancestor_masks
    an_z = 0
    for w in mask_nodes(zmask):
        an_z |= anc[w]
    inc = _incident(g)
    reached = 0
    seen = set()
    stack = [(w, m_w == Mark.ARROW) for w, m_x, m_w in inc[x]]
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        v, arrow_in = state
        reached |= 1 << v
        for w, m_v, m_w in inc[v]:
            collider = arrow_in and m_v == Mark.ARROW
            if collider:
                if not an_z >> v & 1:
                    continue
            elif zmask >> v & 1:
                continue
            stack.append((w, m_w == Mark.ARROW))
    return reached & ~(1 << x)


def m_separated(mag: Mag | Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    g = as_mixed(mag)
    zmask = check_query(g.node_count, x, y, z)
    return not _reachable(g, x, zmask) >> y & 1


def d_separated(dag: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    if not isinstance(dag, Dag):
        raise ArgumentError("d_separated expects a Dag; use m_separated for ancestral graphs")
    return m_separated(dag, x, y, z)


def ancestors(g: Dag | Mag, x: int) -> frozenset:
    if not 0 <= x < g.node_count:
        raise ArgumentError(f"invalid node id {x!r}")
    return frozenset(mask_nodes(g.ancestor_masks[x]))


def latent_project(dag: Dag, observed: Iterable[int]) -> Mag:
    """MAG over ``observed`` obtained by marginalizing every other node.

    Node ``i`` of the result is ``observed[i]`` when a sequence is given,
    otherwise the ``i``-th smallest observed id.
    """
    obs = list(observed) if isinstance(observed, Sequence) else sorted(observed)
    if not obs:
        raise ArgumentError("observed set must be non-empty")
    if len(set(obs)) != len(obs):
        raise ArgumentError("observed nodes must be distinct")
    for v in obs:
        if not 0 <= v < dag.node_count:
            raise ArgumentError(f"invalid node id {v!r}")
    anc = dag.ancestor_masks
    marks = {}
    for i, j in combinations(range(len(obs)), 2):
        a, b = obs[i], obs[j]
        rest = [v for v in obs if v not in (a, b)]
        separable = any(
            d_separated(dag, a, b, s) for k in range(len(rest) + 1) for s in combinations(rest, k)
        )
        if separable:
            continue
        mark_a = Mark.TAIL if anc[b] >> a & 1 else Mark.ARROW
        mark_b = Mark.TAIL if anc[a] >> b & 1 else Mark.ARROW
        marks[(i, j)] = (mark_a, mark_b)
    return Mag(len(obs), marks)


def _ci_queries(n: int):
    for x, y in combinations(range(n), 2):
        others = [v for v in range(n) if v not in (x, y)]
        for k in range(len(others) + 1):
            for z in combinations(others, k):
                yield x, y, z


def independence_fingerprint(g: Dag | Mag) -> frozenset:
    """Every independence ``x _||_ y | z`` entailed by ``g``."""
    n = g.node_count
    if n > FINGERPRINT_MAX_NODES:
        raise CapacityError(f"fingerprints limited to {FINGERPRINT_MAX_NODES} nodes, got {n}")
    mg = as_mixed(g)
    out = set()
    for x, y, z in _ci_queries(n):
        if not _reachable(mg, x, to_mask(z)) >> y & 1:
            out.add(CiStatement(x, y, frozenset(z)))
    return frozenset(out)


def sorted_fingerprint(g: Dag | Mag) -> list[CiStatement]:
    return sorted(independence_fingerprint(g), key=CiStatement.sort_key)


def markov_equivalent(g1: Dag | Mag, g2: Dag | Mag) -> bool:
    if g1.node_count != g2.node_count:
        raise ArgumentError("graphs have different node counts")
    return independence_fingerprint(g1) == independence_fingerprint(g2)


def pag_of(gs: Iterable[Dag | Mag]) -> Pag:
    """Keep the shared skeleton and every mark common to all members."""
    members = [as_mixed(g) for g in gs]
    if not members:
        raise ArgumentError("pag_of needs at least one graph")
    n = members[0].node_count
    skel = members[0].skeleton
    for m in members[1:]:
        if m.node_count != n:
            raise ArgumentError("graphs have different node counts")
        if m.skeleton != skel:
            raise ArgumentError("graphs have different skeletons")
    marks = {}
    for a, b in sorted(skel):
        out = []
        for end, other in ((a, b), (b, a)):
            seen = {m.mark_at(end, other) for m in members}
            out.append(seen.pop() if len(seen) == 1 else Mark.CIRCLE)
        marks[(a, b)] = tuple(out)
    return Pag(n, marks)


def potentially_directed_path(pag: Pag | Mag | Dag, x: int, y: int) -> bool:
    """Is there a path ``x ... y`` whose every edge could read ``u -> w``?"""
    g = pag if isinstance(pag, MixedGraph) else as_mixed(pag)
    n = g.node_count
    for v in (x, y):
        if not isinstance(v, int) or not 0 <= v < n:
            raise ArgumentError(f"invalid node id {v!r}")
    if x == y:
        raise ArgumentError("x and y must differ")
    return bool(pdp_reach(g, x) >> y & 1)


def pdp_reach(g: MixedGraph, x: int) -> int:
    inc = _incident(g)
    reached, stack = 1 << x, [x]
    while stack:
        u = stack.pop()
        for w, m_u, m_w in inc[u]:
            if m_u != Mark.ARROW and m_w != Mark.TAIL and not reached >> w & 1:
                reached |= 1 << w
                stack.append(w)
    return reached & ~(1 << x)
