"""Plain-text graph format.

::

    nodes: 4
    0 -> 1      # tail at 0, arrowhead at 1
    0 <-> 2
    1 o-o 3

The edge token is ``<left>-<right>`` where the left mark is ``<`` (arrow),
``o`` (circle) or empty/``-`` (tail) and the right mark is ``>``, ``o`` or
empty/``-``. Canonical output omits tail characters (``->``, ``o-``).
"""
from __future__ import annotations

import re
from typing import TextIO

from bccd.errors import ArgumentError
from bccd.graphs.core import Dag, Mark, MixedGraph, Pag

_LEFT = {Mark.TAIL: "", Mark.ARROW: "<", Mark.CIRCLE: "o"}
_RIGHT = {Mark.TAIL: "", Mark.ARROW: ">", Mark.CIRCLE: "o"}
_TOKEN = re.compile(r"^(<|o|-)?-(>|o|-)?$")
_PARSE_LEFT = {None: Mark.TAIL, "-": Mark.TAIL, "<": Mark.ARROW, "o": Mark.CIRCLE}
_PARSE_RIGHT = {None: Mark.TAIL, "-": Mark.TAIL, ">": Mark.ARROW, "o": Mark.CIRCLE}


def edge_token(left: Mark, right: Mark) -> str:
    return f"{_LEFT[left]}-{_RIGHT[right]}"


def format_graph(g: Dag | MixedGraph) -> str:
    lines = [f"nodes: {g.node_count}"]
    if isinstance(g, Dag):
        for a, b in sorted(g.edges):
            lines.append(f"{a} -> {b}")
    else:
        for a, b, ma, mb in g.edges:
            lines.append(f"{a} {edge_token(ma, mb)} {b}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str, kind: type = Pag):
    """Parse the text format into ``kind`` (Pag, Mag or Dag)."""
    n = None
    marks = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            m = re.fullmatch(r"nodes:\s*(\d+)", line)
            if not m:
                raise ArgumentError(f"line {lineno}: expected 'nodes: <n>' header")
            n = int(m.group(1))
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ArgumentError(f"line {lineno}: expected '<a> <edge> <b>', got {raw!r}")
        a_s, tok, b_s = parts
        m = _TOKEN.match(tok)
        if not m or not a_s.isdigit() or not b_s.isdigit():
            raise ArgumentError(f"line {lineno}: cannot parse edge {raw!r}")
        a, b = int(a_s), int(b_s)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise ArgumentError(f"line {lineno}: duplicate edge {a}-{b}")
        seen.add(key)
        marks[(a, b)] = (_PARSE_LEFT[m.group(1)], _PARSE_RIGHT[m.group(2)])
    if n is None:
        raise ArgumentError("missing 'nodes: <n>' header")
    try:
        if kind is Dag:
            edges = []
            for (a, b), (ma, mb) in marks.items():
                if (ma, mb) == (Mark.TAIL, Mark.ARROW):
                    edges.append((a, b))
                elif (ma, mb) == (Mark.ARROW, Mark.TAIL):
                    edges.append((b, a))
                else:
                    raise ArgumentError(f"edge {a}-{b} is not directed")
            return Dag(n, frozenset(edges))
        return kind(n, marks)
    except ArgumentError:
        raise
    except (ValueError, TypeError) as exc:
        raise ArgumentError(str(exc)) from exc


def read_graph(fh: TextIO, kind: type = Pag):
    return parse_graph(fh.read(), kind)


def write_graph(fh: TextIO, g) -> None:
    fh.write(format_graph(g))


__all__ = ["edge_token", "format_graph", "parse_graph", "read_graph", "write_graph"]
