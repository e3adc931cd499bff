"""Discrete datasets and their CSV / schema file formats.

CSV: UTF-8, header line of variable names, one record per line, every
cell a category token. Tokens are coded ``0, 1, ...`` in order of first
appearance down the file unless a schema pins the category list.

Schema sidecar: one line per variable, ``name: tok1, tok2, ...``; ``#``
starts a comment. Variables absent from the schema keep first-appearance
coding.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from bccd.errors import ArgumentError


@dataclass(frozen=True, eq=False)
class Dataset:
    names: tuple
    arities: tuple
    values: np.ndarray
    categories: tuple | None = None

    def __post_init__(self):
        names = tuple(str(v) for v in self.names)
        arities = tuple(int(r) for r in self.arities)
        values = np.asarray(self.values, dtype=np.int64)
        if values.ndim == 1 and len(names) == 0:
            values = values.reshape(len(values), 0)
        if values.size == 0:
            values = values.reshape(values.shape[0] if values.ndim == 2 else 0, len(names))
        if values.ndim != 2 or values.shape[1] != len(names):
            raise ArgumentError(f"values must be (rows, {len(names)}), got {values.shape}")
        if len(arities) != len(names):
            raise ArgumentError("one arity per variable required")
        if len(set(names)) != len(names):
            raise ArgumentError("variable names must be unique")
        for j, r in enumerate(arities):
            if r < 2:
                raise ArgumentError(f"arity of {names[j]!r} must be at least 2")
            col = values[:, j]
            if len(col) and (col.min() < 0 or col.max() >= r):
                raise ArgumentError(f"codes of {names[j]!r} outside 0..{r - 1}")
        if self.categories is not None:
            cats = tuple(tuple(str(t) for t in c) for c in self.categories)
            if [len(c) for c in cats] != list(arities):
                raise ArgumentError("category lists must match arities")
            object.__setattr__(self, "categories", cats)
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, names=None, arities=None) -> "Dataset":
        """Wrap an integer array; arities default to ``max(2, max code + 1)``."""
        values = np.asarray(values, dtype=np.int64)
        if values.ndim != 2:
            raise ArgumentError("expected a 2-d array of codes")
        n = values.shape[1]
        names = tuple(names) if names is not None else tuple(f"V{j}" for j in range(n))
        if arities is None:
            arities = tuple(max(2, int(values[:, j].max()) + 1 if len(values) else 2) for j in range(n))
        return cls(names, arities, values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def index(self, var) -> int:
        """Column index of a variable given by name or index."""
        if isinstance(var, (int, np.integer)) and not isinstance(var, bool):
            if not 0 <= var < self.n_vars:
                raise ArgumentError(f"variable index {var} out of range")
            return int(var)
        try:
            return self.names.index(str(var))
        except ValueError:
            raise ArgumentError(f"unknown variable {var!r}") from None

    def subset(self, variables: Sequence) -> "Dataset":
        """Column view in the given variable order."""
        cols = [self.index(v) for v in variables]
        if len(set(cols)) != len(cols):
            raise ArgumentError("duplicate variables in subset")
        cats = None if self.categories is None else tuple(self.categories[c] for c in cols)
        return Dataset(
            tuple(self.names[c] for c in cols),
            tuple(self.arities[c] for c in cols),
            self.values[:, cols],
            cats,
        )

    def drop(self, variables) -> "Dataset":
        gone = {self.index(v) for v in variables}
        keep = [j for j in range(self.n_vars) if j not in gone]
        if not keep:
            raise ArgumentError("cannot drop every column")
        return self.subset(keep)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.names == other.names
            and self.arities == other.arities
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"Dataset(vars={list(self.names)}, rows={self.n_rows}, arities={list(self.arities)})"


def parse_schema(text: str) -> dict[str, list[str]]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ArgumentError(f"schema line {lineno}: expected 'name: tok1, tok2, ...'")
        name, rest = line.split(":", 1)
        toks = [t.strip() for t in rest.split(",") if t.strip()]
        if len(set(toks)) != len(toks):
            raise ArgumentError(f"schema line {lineno}: duplicate category")
        if len(toks) < 2:
            raise ArgumentError(f"schema line {lineno}: need at least 2 categories")
        out[name.strip()] = toks
    return out


def format_schema(ds: Dataset) -> str:
    cats = ds.categories or tuple(tuple(str(k) for k in range(r)) for r in ds.arities)
    return "".join(f"{n}: {', '.join(c)}\n" for n, c in zip(ds.names, cats))


def parse_csv(text: str, schema: dict | None = None) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ArgumentError("line 1: empty file, expected a header") from None
    names = [h.strip() for h in header]
    if not names or any(not h for h in names):
        raise ArgumentError("line 1: empty variable name in header")
    if len(set(names)) != len(names):
        raise ArgumentError("line 1: duplicate variable names")
    schema = schema or {}
    unknown = set(schema) - set(names)
    if unknown:
        raise ArgumentError(f"schema names unknown variables: {sorted(unknown)}")
    codes = [dict((t, k) for k, t in enumerate(schema.get(n, []))) for n in names]
    pinned = [n in schema for n in names]
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != len(names):
            raise ArgumentError(f"line {lineno}: expected {len(names)} cells, got {len(rec)}")
        row = []
        for j, cell in enumerate(rec):
            tok = cell.strip()
            if tok == "":
                raise ArgumentError(f"line {lineno}: missing value for {names[j]!r}")
            table = codes[j]
            if tok not in table:
                if pinned[j]:
                    raise ArgumentError(f"line {lineno}: {tok!r} not a declared category of {names[j]!r}")
                table[tok] = len(table)
            row.append(table[tok])
        rows.append(row)
    values = np.array(rows, dtype=np.int64).reshape(len(rows), len(names))
    cats, arities = [], []
    for j, table in enumerate(codes):
        toks = sorted(table, key=table.get)
        while len(toks) < 2:
            # a constant (or empty) column still gets a binary domain
            toks.append(f"_unused{len(toks)}")
        cats.append(tuple(toks))
        arities.append(len(toks))
    return Dataset(tuple(names), tuple(arities), values, tuple(cats))


def read_csv(path, schema_path=None) -> Dataset:
    schema = parse_schema(Path(schema_path).read_text(encoding="utf-8")) if schema_path else None
    return parse_csv(Path(path).read_text(encoding="utf-8"), schema)


def format_csv(ds: Dataset) -> str:
    cats = ds.categories or tuple(tuple(str(k) for k in range(r)) for r in ds.arities)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ds.names)
    for row in ds.values:
        w.writerow([cats[j][v] for j, v in enumerate(row)])
    return buf.getvalue()


def write_csv(ds: Dataset, path) -> None:
    Path(path).write_text(format_csv(ds), encoding="utf-8")


__all__ = [
    "Dataset",
    "format_csv",
    "format_schema",
    "parse_csv",
    "parse_schema",
    "read_csv",
    "write_csv",
]
