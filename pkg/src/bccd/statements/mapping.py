"""The precomputed uDAG -> statements mapping table and its cache file.

Binary layout (little-endian)::

    magic    8 bytes  b"BCCDMAP1"
    version  u32      (RULES_VERSION << 16) | CANONICAL_ORDER_VERSION
    k_max    u8
    per level n = 1..k_max:
        rows u32
        per row (canonical DAG order):
            count u16
            per statement: kind u8, z u8, x u8, y u8   (unused slot = 0xFF)

Statements within a row are written in ``statement_space(n)`` order.
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs.enumeration import CANONICAL_ORDER_VERSION, MAX_ENUM_NODES, dag_table, index_of_dag
from bccd.statements.catalog import cache_dir
from bccd.statements.core import (
    CausalStatement,
    Kind,
    close_rows,
    rows_to_sets,
    statement_space,
)
from bccd.statements.rules import RULES_VERSION, oracle_rows, udag_rows

MAGIC = b"BCCDMAP1"
MAPPING_VERSION = (RULES_VERSION << 16) | CANONICAL_ORDER_VERSION
UNUSED = 0xFF


@dataclass(frozen=True)
class MappingTable:
    k_max: int
    rows: dict = field(repr=False)  # level -> (G, S) bool array
    version: int = MAPPING_VERSION

    def level_rows(self, n: int) -> np.ndarray:
        if n not in self.rows:
            raise CapacityError(f"mapping covers levels 1..{self.k_max}, not {n}")
        return self.rows[n]

    def row_count(self, n: int) -> int:
        return len(self.level_rows(n))

    def statements(self, n: int, index: int) -> frozenset:
        return rows_to_sets(self.level_rows(n)[index], n)[0]

    def statements_of(self, g) -> frozenset:
        return self.statements(g.node_count, index_of_dag(g))

    def __eq__(self, other):
        if not isinstance(other, MappingTable):
            return NotImplemented
        return (
            self.k_max == other.k_max
            and self.version == other.version
            and all(np.array_equal(self.rows[n], other.rows[n]) for n in self.rows)
        )


def _tail_rows(n: int) -> np.ndarray:
    space = statement_space(n)
    cause = np.array([s.kind == Kind.CAUSE for s in space], dtype=bool)
    return oracle_rows(n) & cause


def mapping_rows(n: int) -> np.ndarray:
    """uDAG-rule rows, plus oracle-certified causes, closed."""
    rows = udag_rows(n)
    if rows.shape[1] == 0:
        return rows
    closed, _ = close_rows(rows | _tail_rows(n), n)
    return closed


def build_mapping(k_max: int = 5) -> MappingTable:
    if not isinstance(k_max, int) or not 1 <= k_max <= MAX_ENUM_NODES:
        raise CapacityError(f"k_max must be in 1..{MAX_ENUM_NODES}, got {k_max!r}")
    rows = {}
    for n in range(1, k_max + 1):
        r = mapping_rows(n)
        r.setflags(write=False)
        rows[n] = r
    return MappingTable(k_max, rows)


# ------------------------------------------------------------------ file I/O


def _codes(n: int) -> np.ndarray:
    out = np.full((len(statement_space(n)), 4), UNUSED, dtype=np.uint8)
    for i, s in enumerate(statement_space(n)):
        out[i, 0] = int(s.kind)
        for k, v in enumerate((s.z, s.x, s.y), start=1):
            if v is not None:
                out[i, k] = v
    return out


def encode_mapping(table: MappingTable) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IB", table.version, table.k_max))
    for n in range(1, table.k_max + 1):
        rows = table.level_rows(n)
        codes = _codes(n)
        buf.write(struct.pack("<I", len(rows)))
        for r in rows:
            idx = np.flatnonzero(r)
            buf.write(struct.pack("<H", len(idx)))
            buf.write(codes[idx].tobytes())
    return buf.getvalue()


def decode_mapping(data: bytes) -> MappingTable:
    if data[:8] != MAGIC:
        raise ArgumentError("not a mapping cache file (bad magic)")
    try:
        version, k_max = struct.unpack_from("<IB", data, 8)
    except struct.error as exc:
        raise ArgumentError("truncated mapping header") from exc
    if version != MAPPING_VERSION:
        raise ArgumentError(f"mapping version {version:#x} does not match {MAPPING_VERSION:#x}")
    if not 1 <= k_max <= MAX_ENUM_NODES:
        raise ArgumentError(f"mapping k_max {k_max} out of range")
    pos = 13
    rows = {}
    try:
        for n in range(1, k_max + 1):
            (count,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if count != len(dag_table(n)):
                raise ArgumentError(f"level {n}: {count} rows, expected {len(dag_table(n))}")
            lookup = {tuple(c): i for i, c in enumerate(_codes(n).tolist())}
            mat = np.zeros((count, len(statement_space(n))), dtype=bool)
            for g in range(count):
                (k,) = struct.unpack_from("<H", data, pos)
                pos += 2
                chunk = np.frombuffer(data, dtype=np.uint8, count=4 * k, offset=pos).reshape(k, 4)
                pos += 4 * k
                for c in chunk.tolist():
                    try:
                        mat[g, lookup[tuple(c)]] = True
                    except KeyError:
                        raise ArgumentError(f"level {n} row {g}: invalid statement code {c}") from None
            mat.setflags(write=False)
            rows[n] = mat
    except (struct.error, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise ArgumentError("truncated mapping file") from exc
    if pos != len(data):
        raise ArgumentError("trailing bytes after mapping data")
    return MappingTable(k_max, rows, version)


def save_mapping(table: MappingTable, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_mapping(table))
    os.replace(tmp, path)


def load_mapping(path) -> MappingTable:
    return decode_mapping(Path(path).read_bytes())


def dump_text(table: MappingTable) -> str:
    """Human-readable mirror of the cache: one line per row."""
    lines = [f"# mapping version {table.version:#x} k_max {table.k_max}"]
    for n in range(1, table.k_max + 1):
        rows = table.level_rows(n)
        lines.append(f"level {n} rows {len(rows)}")
        for g, stmts in enumerate(rows_to_sets(rows, n) if len(rows) else []):
            body = "; ".join(str(s) for s in sorted(stmts, key=CausalStatement.sort_key))
            lines.append(f"{n}:{g}: {body}")
    return "\n".join(lines) + "\n"


def default_mapping_path(k_max: int) -> Path:
    return cache_dir() / f"mapping_k{k_max}_v{MAPPING_VERSION:x}.bin"


def get_mapping(k_max: int = 5, path=None) -> MappingTable:
    """Load the cached table, rebuilding it when absent or stale."""
    path = Path(path) if path else default_mapping_path(k_max)
    if path.exists():
        try:
            table = load_mapping(path)
            if table.k_max >= k_max:
                return table
        except ArgumentError:
            pass
    table = build_mapping(k_max)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_mapping(table, path)
    except OSError:
        pass
    return table


__all__ = [
    "MAGIC",
    "MAPPING_VERSION",
    "MappingTable",
    "build_mapping",
    "decode_mapping",
    "default_mapping_path",
    "dump_text",
    "encode_mapping",
    "get_mapping",
    "load_mapping",
    "mapping_rows",
    "save_mapping",
]
