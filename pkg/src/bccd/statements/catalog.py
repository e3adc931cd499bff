"""Exhaustive catalog of MAG equivalence classes on up to five nodes.

Every maximal ancestral graph (no undirected edges) is generated, grouped
by independence fingerprint, and summarised per class:

* ``fp``: the class fingerprint over ``ci_index(n)``
* ``pag``: endpoint marks of the class PAG, ``pag[c, a, b]`` is the mark
  at ``a`` on edge ``a - b`` (``NO_EDGE`` when non-adjacent)
* ``not_anc``: ``not_anc[c, a, b]`` is True when ``a`` is an ancestor of
  ``b`` in no member of the class
* ``size``: number of member MAGs

Level 5 takes ~15 s to build, so catalogs are cached as ``.npz`` files.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from bccd.graphs._batch import batch_ancestors, batch_fingerprints, ci_index, fingerprint_keys
from bccd.graphs.core import Mark
from bccd.graphs.enumeration import _check_level, ancestral_table, dag_fingerprints

CATALOG_VERSION = 1
NO_EDGE = 255


def cache_dir() -> Path:
    """Where derived tables are cached (``BCCD_CACHE_DIR`` overrides)."""
    root = os.environ.get("BCCD_CACHE_DIR")
    path = Path(root) if root else Path.home() / ".cache" / "bccd"
    return path


@dataclass(frozen=True)
class MagCatalog:
    n: int
    fp: np.ndarray
    pag: np.ndarray
    not_anc: np.ndarray
    size: np.ndarray

    def __len__(self):
        return len(self.fp)

    @property
    def keys(self) -> dict:
        return _keys(self)


_KEYS: dict = {}


def _keys(cat: MagCatalog) -> dict:
    k = id(cat)
    if k not in _KEYS:
        _KEYS[k] = {key: i for i, key in enumerate(fingerprint_keys(cat.fp))}
    return _KEYS[k]


def endpoint_marks(pa: np.ndarray, sp: np.ndarray) -> np.ndarray:
    """``(G, n, n)`` uint8 marks at the first index on each edge."""
    G, n = pa.shape
    out = np.full((G, n, n), NO_EDGE, dtype=np.uint8)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            a_to_b = (pa[:, b] >> a) & 1 == 1
            b_to_a = (pa[:, a] >> b) & 1 == 1
            bi = (sp[:, a] >> b) & 1 == 1
            out[a_to_b, a, b] = Mark.TAIL
            out[b_to_a | bi, a, b] = Mark.ARROW
    return out


def maximal_mask(pa: np.ndarray, sp: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """Ancestral graphs in which every non-adjacent pair is separable."""
    G, n = pa.shape
    q = np.array(ci_index(n)).reshape(-1, 3)
    ok = np.ones(G, dtype=bool)
    for x in range(n):
        for y in range(x + 1, n):
            adj = ((pa[:, y] >> x) | (pa[:, x] >> y) | (sp[:, x] >> y)) & 1
            sel = (q[:, 0] == x) & (q[:, 1] == y)
            ok &= (adj == 1) | fp[:, sel].any(axis=1)
    return ok


def _build(n: int) -> MagCatalog:
    pa, sp = ancestral_table(n)
    fp = batch_fingerprints(pa, sp)
    keep = maximal_mask(pa, sp, fp)
    pa, sp, fp = pa[keep], sp[keep], fp[keep]
    keys = fingerprint_keys(fp)
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    # classes numbered by their first member in ancestral-table order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    cls = rank[inverse]
    C = len(uniq)
    marks = endpoint_marks(pa, sp)
    by = np.argsort(cls, kind="stable")
    starts = np.searchsorted(cls[by], np.arange(C))
    lo = np.minimum.reduceat(marks[by], starts, axis=0)
    hi = np.maximum.reduceat(marks[by], starts, axis=0)
    pag = np.where(lo == hi, lo, np.uint8(Mark.CIRCLE)).astype(np.uint8)
    anc = batch_ancestors(pa.astype(np.int64))
    is_anc = np.zeros((len(pa), n, n), dtype=bool)
    for b in range(n):
        for a in range(n):
            is_anc[:, a, b] = (anc[:, b] >> a) & 1 == 1
    ever = np.logical_or.reduceat(is_anc[by], starts, axis=0)
    size = np.diff(np.append(starts, len(by)))
    return MagCatalog(n, fp[first[order]], pag, ~ever, size)


def _path(n: int) -> Path:
    return cache_dir() / f"mag_catalog_n{n}_v{CATALOG_VERSION}.npz"


@lru_cache(maxsize=None)
def mag_catalog(n: int, use_cache: bool = True) -> MagCatalog:
    _check_level(n)
    if n <= 4 or not use_cache:
        return _build(n)
    path = _path(n)
    if path.exists():
        try:
            with np.load(path) as z:
                return MagCatalog(n, z["fp"], z["pag"], z["not_anc"], z["size"])
        except (OSError, KeyError, ValueError):
            pass
    cat = _build(n)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez_compressed(tmp, fp=cat.fp, pag=cat.pag, not_anc=cat.not_anc, size=cat.size)
        os.replace(tmp, path)
    except OSError:
        pass
    return cat


@lru_cache(maxsize=None)
def dag_class_of(n: int) -> np.ndarray:
    """MAG-catalog class id of every canonical DAG."""
    cat = mag_catalog(n)
    lookup = cat.keys
    return np.array([lookup[k] for k in fingerprint_keys(dag_fingerprints(n))], dtype=np.int64)


__all__ = ["CATALOG_VERSION", "MagCatalog", "NO_EDGE", "cache_dir", "dag_class_of", "endpoint_marks", "mag_catalog"]
