"""Graph types: DAGs, ancestral graphs and partial ancestral graphs.

Nodes are dense integer ids ``0..node_count-1``. Sets of nodes are
accepted as any iterable of ints; internally they are bitmasks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Mapping

from bccd.errors import ArgumentError


class Mark(IntEnum):
    """Endpoint mark of an edge, read at the node it touches."""

    TAIL = 0
    ARROW = 1
    CIRCLE = 2


def to_mask(nodes: Iterable[int]) -> int:
    mask = 0
    for v in nodes:
        mask |= 1 << int(v)
    return mask


def mask_nodes(mask: int) -> tuple[int, ...]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return tuple(out)


def _check_node(n: int, v: int) -> None:
    if not isinstance(v, (int,)) or isinstance(v, bool) or not 0 <= v < n:
        raise ArgumentError(f"invalid node id {v!r} for a graph on {n} nodes")


def check_query(n: int, x: int, y: int, z: Iterable[int]) -> int:
    """Validate a separation query and return the conditioning mask."""
    _check_node(n, x)
    _check_node(n, y)
    if x == y:
        raise ArgumentError("x and y must differ")
    zs = tuple(z)
    for v in zs:
        _check_node(n, v)
    zmask = to_mask(zs)
    if zmask >> x & 1 or zmask >> y & 1:
        raise ArgumentError("x and y may not appear in the conditioning set")
    return zmask


def _ancestor_masks(n: int, parents: tuple[int, ...]) -> tuple[int, ...]:
    anc = [1 << v for v in range(n)]
    changed = True
    while changed:
        changed = False
        for v in range(n):
            new = anc[v]
            pm = parents[v]
            u = 0
            while pm:
                if pm & 1:
                    new |= anc[u]
                pm >>= 1
                u += 1
            if new != anc[v]:
                anc[v] = new
                changed = True
    return tuple(anc)


def _is_acyclic(n: int, parents: tuple[int, ...]) -> bool:
    remaining = (1 << n) - 1
    while remaining:
        sources = [v for v in range(n) if remaining >> v & 1 and not parents[v] & remaining]
        if not sources:
            return False
        for v in sources:
            remaining &= ~(1 << v)
    return True


@dataclass(frozen=True)
class Dag:
    """A directed acyclic graph given by its ``(parent, child)`` edges."""

    node_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        n = self.node_count
        if not isinstance(n, int) or n < 0:
            raise ArgumentError(f"node_count must be a non-negative int, got {n!r}")
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for a, b in edges:
            _check_node(n, a)
            _check_node(n, b)
            if a == b:
                raise ArgumentError(f"self-loop at node {a}")
            pair = (min(a, b), max(a, b))
            if pair in seen:
                raise ArgumentError(f"more than one edge between {pair[0]} and {pair[1]}")
            seen.add(pair)
        if not _is_acyclic(n, self.parent_masks):
            raise ArgumentError("edges contain a directed cycle")

    @classmethod
    def from_parent_masks(cls, masks: Iterable[int]) -> "Dag":
        masks = [int(m) for m in masks]
        edges = [(u, v) for v, m in enumerate(masks) for u in mask_nodes(m)]
        return cls(len(masks), frozenset(edges))

    @cached_property
    def parent_masks(self) -> tuple[int, ...]:
        pm = [0] * self.node_count
        for a, b in self.edges:
            pm[b] |= 1 << a
        return tuple(pm)

    @cached_property
    def ancestor_masks(self) -> tuple[int, ...]:
        return _ancestor_masks(self.node_count, self.parent_masks)

    def parents(self, v: int) -> tuple[int, ...]:
        return mask_nodes(self.parent_masks[v])

    def children(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(b for a, b in self.edges if a == v))

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def without_edge(self, a: int, b: int) -> "Dag":
        return Dag(self.node_count, self.edges - {(a, b), (b, a)})

    def topological_order(self) -> tuple[int, ...]:
        order, remaining = [], (1 << self.node_count) - 1
        pm = self.parent_masks
        while remaining:
            for v in range(self.node_count):
                if remaining >> v & 1 and not pm[v] & remaining:
                    order.append(v)
                    remaining &= ~(1 << v)
                    break
        return tuple(order)

    def n_free_parameters(self, arity: int = 2) -> int:
        """CPT dimension sum_i q_i (r_i - 1) with every arity fixed."""
        return sum(arity ** bin(m).count("1") * (arity - 1) for m in self.parent_masks)

    def __repr__(self):
        body = ", ".join(f"{a}->{b}" for a, b in sorted(self.edges))
        return f"Dag({self.node_count}: {body})"


class MixedGraph:
    """Graph whose edges carry a mark at each endpoint.

    ``marks`` maps an unordered pair ``(a, b)`` to ``(mark_at_a, mark_at_b)``.
    Pairs may be given in either order; storage is canonical with ``a < b``.
    """

    allowed_marks: frozenset = frozenset(Mark)

    def __init__(self, node_count: int, marks: Mapping | Iterable = ()):
        if not isinstance(node_count, int) or node_count < 0:
            raise ArgumentError(f"node_count must be a non-negative int, got {node_count!r}")
        self.node_count = node_count
        items = marks.items() if isinstance(marks, Mapping) else marks
        store: dict[tuple[int, int], tuple[Mark, Mark]] = {}
        for entry in items:
            if len(entry) == 2:
                (a, b), (ma, mb) = entry
            else:
                a, b, ma, mb = entry
            a, b = int(a), int(b)
            _check_node(node_count, a)
            _check_node(node_count, b)
            if a == b:
                raise ArgumentError(f"self-loop at node {a}")
            ma, mb = Mark(ma), Mark(mb)
            if ma not in self.allowed_marks or mb not in self.allowed_marks:
                raise ArgumentError(f"mark not allowed in {type(self).__name__}: {ma.name}/{mb.name}")
            if a > b:
                a, b, ma, mb = b, a, mb, ma
            if (a, b) in store:
                raise ArgumentError(f"more than one edge between {a} and {b}")
            store[(a, b)] = (ma, mb)
        self._marks = dict(sorted(store.items()))
        self._validate()

    def _validate(self) -> None:
        pass

    @property
    def edges(self) -> tuple[tuple[int, int, Mark, Mark], ...]:
        return tuple((a, b, ma, mb) for (a, b), (ma, mb) in self._marks.items())

    @property
    def skeleton(self) -> frozenset:
        return frozenset(self._marks)

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._marks

    def mark_at(self, end: int, other: int) -> Mark | None:
        """Mark at ``end`` on the edge ``end *-* other``; None when not adjacent."""
        if end < other:
            m = self._marks.get((end, other))
            return None if m is None else m[0]
        m = self._marks.get((other, end))
        return None if m is None else m[1]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted({b if a == v else a for a, b in self._marks if v in (a, b)}))

    @cached_property
    def parent_masks(self) -> tuple[int, ...]:
        pm = [0] * self.node_count
        for (a, b), (ma, mb) in self._marks.items():
            if ma == Mark.TAIL and mb == Mark.ARROW:
                pm[b] |= 1 << a
            elif ma == Mark.ARROW and mb == Mark.TAIL:
                pm[a] |= 1 << b
        return tuple(pm)

    @cached_property
    def spouse_masks(self) -> tuple[int, ...]:
        sp = [0] * self.node_count
        for (a, b), (ma, mb) in self._marks.items():
            if ma == Mark.ARROW and mb == Mark.ARROW:
                sp[a] |= 1 << b
                sp[b] |= 1 << a
        return tuple(sp)

    @cached_property
    def ancestor_masks(self) -> tuple[int, ...]:
        return _ancestor_masks(self.node_count, self.parent_masks)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.node_count == other.node_count
            and self._marks == other._marks
        )

    def __hash__(self):
        return hash((type(self).__name__, self.node_count, tuple(self._marks.items())))

    def __repr__(self):
        from bccd.graphs.textio import edge_token

        body = ", ".join(f"{a} {edge_token(ma, mb)} {b}" for a, b, ma, mb in self.edges)
        return f"{type(self).__name__}({self.node_count}: {body})"


class Mag(MixedGraph):
    """Ancestral graph with directed and bidirected edges only.

    Maximality is not checked here; graphs built by ``latent_project`` are
    maximal by construction.
    """

    allowed_marks = frozenset({Mark.TAIL, Mark.ARROW})

    def _validate(self) -> None:
        for (a, b), (ma, mb) in self._marks.items():
            if ma == Mark.TAIL and mb == Mark.TAIL:
                raise ArgumentError(f"undirected edge {a} - {b}: selection bias is not supported")
        if not _is_acyclic(self.node_count, self.parent_masks):
            raise ArgumentError("directed cycle in ancestral graph")
        anc = self.ancestor_masks
        for (a, b), (ma, mb) in self._marks.items():
            if ma == Mark.ARROW and mb == Mark.ARROW and (anc[b] >> a & 1 or anc[a] >> b & 1):
                raise ArgumentError(f"almost directed cycle through {a} <-> {b}")

    @classmethod
    def from_dag(cls, dag: Dag) -> "Mag":
        return cls(dag.node_count, {(a, b): (Mark.TAIL, Mark.ARROW) for a, b in dag.edges})

    @classmethod
    def from_masks(cls, parents: Iterable[int], spouses: Iterable[int]) -> "Mag":
        parents, spouses = list(parents), list(spouses)
        marks = {}
        for v, pm in enumerate(parents):
            for u in mask_nodes(int(pm)):
                marks[(u, v)] = (Mark.TAIL, Mark.ARROW)
        for v, sm in enumerate(spouses):
            for u in mask_nodes(int(sm)):
                if u < v:
                    marks[(u, v)] = (Mark.ARROW, Mark.ARROW)
        return cls(len(parents), marks)

    def is_dag(self) -> bool:
        return not any(self.spouse_masks)

    def to_dag(self) -> Dag:
        if not self.is_dag():
            raise ArgumentError("graph has bidirected edges")
        return Dag.from_parent_masks(self.parent_masks)


class Pag(MixedGraph):
    """Partial ancestral graph: marks from {tail, arrowhead, circle}."""

    def _validate(self) -> None:
        for (a, b), (ma, mb) in self._marks.items():
            if ma == Mark.TAIL and mb == Mark.TAIL:
                raise ArgumentError(f"undirected edge {a} - {b}: selection bias is not supported")

    @classmethod
    def from_graph(cls, g: "Dag | Mag | Pag") -> "Pag":
        if isinstance(g, Dag):
            g = Mag.from_dag(g)
        return cls(g.node_count, {(a, b): (ma, mb) for a, b, ma, mb in g.edges})


@dataclass(frozen=True)
class CiStatement:
    """``x _||_ y | z`` (or its negation); stored with ``x < y``."""

    x: int
    y: int
    z: frozenset = frozenset()
    independent: bool = True

    def __post_init__(self):
        if self.x == self.y:
            raise ArgumentError("x and y must differ")
        z = frozenset(int(v) for v in self.z)
        if self.x in z or self.y in z:
            raise ArgumentError("x and y may not appear in the conditioning set")
        object.__setattr__(self, "z", z)
        if self.x > self.y:
            x, y = self.y, self.x
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "y", y)

    def sort_key(self):
        return (self.x, self.y, to_mask(self.z), not self.independent)

    def __repr__(self):
        rel = "_||_" if self.independent else "~||~"
        return f"{self.x} {rel} {self.y} | {{{', '.join(map(str, sorted(self.z)))}}}"


def as_mixed(g: "Dag | Mag") -> Mag:
    return Mag.from_dag(g) if isinstance(g, Dag) else g
