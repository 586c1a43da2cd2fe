"""Typed tabular data: schema, loading, normalization, entropy and splits.

Tables are column-oriented and immutable. Numeric columns are stored as
``float64`` arrays with ``NaN`` as the missing marker; categorical columns are
object arrays of ``str`` with ``None`` as the missing marker.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

DEFAULT_ENTROPY_BINS = 10


class DataError(ValueError):
    """Raised when a table, schema or file violates its contract."""


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind
    quasi: bool = False
    sensitive: bool = False


@dataclass(frozen=True)
class Schema:
    """Ordered column definitions with optional quasi-identifier/sensitive flags."""

    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if not cols:
            raise DataError("schema needs at least one column")
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in schema: {names}")
        both = [c.name for c in cols if c.quasi and c.sensitive]
        if both:
            raise DataError(f"columns cannot be both quasi-identifier and sensitive: {both}")

    @classmethod
    def of(cls, *pairs: tuple[str, str | ColumnKind], quasi: Iterable[str] = (),
           sensitive: Iterable[str] = ()) -> "Schema":
        quasi, sensitive = set(quasi), set(sensitive)
        return cls(tuple(Column(n, ColumnKind(k), n in quasi, n in sensitive) for n, k in pairs))

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def kinds(self) -> list[ColumnKind]:
        return [c.kind for c in self.columns]

    @property
    def quasi_identifiers(self) -> list[str]:
        return [c.name for c in self.columns if c.quasi]

    @property
    def sensitive_columns(self) -> list[str]:
        return [c.name for c in self.columns if c.sensitive]

    def __len__(self) -> int:
        return len(self.columns)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DataError(f"unknown column {name!r}")

    def column(self, name: str) -> Column:
        return self.columns[self.index(name)]

    def select(self, names: Sequence[str]) -> "Schema":
        return Schema(tuple(self.column(n) for n in names))

    def same_layout(self, other: "Schema") -> bool:
        """True when names and kinds agree (flags are ignored)."""
        return self.names == other.names and self.kinds == other.kinds

    def to_json(self) -> dict[str, Any]:
        return {"columns": [{"name": c.name, "kind": c.kind.value, "quasi": c.quasi,
                             "sensitive": c.sensitive} for c in self.columns]}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "Schema":
        try:
            return cls(tuple(
                Column(c["name"], ColumnKind(c["kind"]), bool(c.get("quasi", False)),
                       bool(c.get("sensitive", False)))
                for c in doc["columns"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed schema document: {exc}") from exc
        except ValueError as exc:
            raise DataError(str(exc)) from exc


def load_schema(path: str | Path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return Schema.from_json(json.load(fh))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Table:
    """An immutable, column-oriented table."""

    schema: Schema
    data: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.data) != len(self.schema):
            raise DataError("column count does not match schema")
        lengths = {len(c) for c in self.data}
        if len(lengths) > 1:
            raise DataError(f"columns have different lengths: {sorted(lengths)}")
        cols = []
        for col, arr in zip(self.schema.columns, self.data):
            if col.kind is ColumnKind.NUMERIC:
                arr = np.array(arr, dtype=np.float64)
                if np.isinf(arr).any():
                    raise DataError(f"column {col.name!r} contains non-finite values")
            else:
                arr = np.array([None if v is None else str(v) for v in arr], dtype=object)
            cols.append(_freeze(arr))
        object.__setattr__(self, "data", tuple(cols))

    @classmethod
    def from_rows(cls, schema: Schema, rows: Iterable[Sequence[Any]]) -> "Table":
        rows = [list(r) for r in rows]
        for i, r in enumerate(rows):
            if len(r) != len(schema):
                raise DataError(f"row {i} has {len(r)} values, schema has {len(schema)} columns")
        cols = []
        for j, col in enumerate(schema.columns):
            values = [r[j] for r in rows]
            if col.kind is ColumnKind.NUMERIC:
                cols.append(np.array([math.nan if v is None else float(v) for v in values],
                                     dtype=np.float64))
            else:
                cols.append(np.array(values, dtype=object))
        return cls(schema, tuple(cols))

    @classmethod
    def from_columns(cls, schema: Schema, columns: dict[str, Sequence[Any]]) -> "Table":
        return cls(schema, tuple(np.asarray(columns[n], dtype=object if k is ColumnKind.CATEGORICAL
                                            else np.float64)
                                 for n, k in zip(schema.names, schema.kinds)))

    @property
    def n_rows(self) -> int:
        return len(self.data[0])

    def __len__(self) -> int:
        return self.n_rows

    def column(self, name: str) -> np.ndarray:
        return self.data[self.schema.index(name)]

    @property
    def rows(self) -> list[list[Any]]:
        out = []
        for i in range(self.n_rows):
            row = []
            for kind, arr in zip(self.schema.kinds, self.data):
                v = arr[i]
                if kind is ColumnKind.NUMERIC:
                    v = None if math.isnan(v) else float(v)
                row.append(v)
            out.append(row)
        return out

    def row(self, i: int) -> list[Any]:
        return [None if (k is ColumnKind.NUMERIC and math.isnan(a[i])) else
                (float(a[i]) if k is ColumnKind.NUMERIC else a[i])
                for k, a in zip(self.schema.kinds, self.data)]

    def take(self, indices: Sequence[int] | np.ndarray) -> "Table":
        idx = np.asarray(indices, dtype=np.intp)
        return Table(self.schema, tuple(a[idx] for a in self.data))

    def select(self, names: Sequence[str]) -> "Table":
        return Table(self.schema.select(names), tuple(self.column(n) for n in names))

    def with_schema(self, schema: Schema) -> "Table":
        if not schema.same_layout(self.schema):
            raise DataError("schema layout differs from table layout")
        return Table(schema, self.data)

    def concat(self, other: "Table") -> "Table":
        check_same_schema(self, other)
        return Table(self.schema, tuple(np.concatenate([a, b]) for a, b in zip(self.data, other.data)))

    def missing_mask(self, name: str | None = None) -> np.ndarray:
        """Boolean mask of missing cells for one column, or any column when ``name`` is None."""
        cols = [self.schema.index(name)] if name is not None else range(len(self.schema))
        mask = np.zeros(self.n_rows, dtype=bool)
        for j in cols:
            arr = self.data[j]
            if self.schema.kinds[j] is ColumnKind.NUMERIC:
                mask |= np.isnan(arr)
            else:
                mask |= np.array([v is None for v in arr], dtype=bool)
        return mask

    def require_complete(self, what: str = "table") -> None:
        if self.missing_mask().any():
            raise DataError(f"{what} contains missing values; this metric requires complete records")

    def equals(self, other: "Table") -> bool:
        if not self.schema.same_layout(other.schema) or self.n_rows != other.n_rows:
            return False
        for kind, a, b in zip(self.schema.kinds, self.data, other.data):
            if kind is ColumnKind.NUMERIC:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True


def check_same_schema(*tables: Table) -> None:
    first = tables[0].schema
    for t in tables[1:]:
        if not first.same_layout(t.schema):
            raise DataError(f"schema mismatch: {first.names} vs {t.schema.names}")


def _parse_float(token: str) -> float | None:
    try:
        v = float(token)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path: str | Path, schema_hint: Schema | None = None) -> Table:
    """Read a comma-delimited UTF-8 CSV with a header row.

    Without ``schema_hint`` a column is numeric iff every non-empty cell parses
    as a finite real. Empty cells become the missing marker.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            records = list(csv.reader(fh, delimiter=",", quotechar='"'))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: missing header line")
    header, body = records[0], records[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{i}: ragged row ({len(r)} values, header has {len(header)})")

    if schema_hint is None:
        cols = []
        for j, name in enumerate(header):
            cells = [r[j] for r in body if r[j] != ""]
            numeric = all(_parse_float(c) is not None for c in cells)
            cols.append(Column(name, ColumnKind.NUMERIC if numeric else ColumnKind.CATEGORICAL))
        schema = Schema(tuple(cols))
    else:
        if schema_hint.names != header:
            raise DataError(f"{path}: header {header} does not match schema {schema_hint.names}")
        schema = schema_hint

    data = []
    for j, col in enumerate(schema.columns):
        if col.kind is ColumnKind.NUMERIC:
            values = []
            for i, r in enumerate(body, start=2):
                cell = r[j]
                if cell == "":
                    values.append(math.nan)
                    continue
                v = _parse_float(cell)
                if v is None:
                    raise DataError(f"{path}:{i}: column {col.name!r} value {cell!r} is not a finite real")
                values.append(v)
            data.append(np.array(values, dtype=np.float64))
        else:
            data.append(np.array([None if r[j] == "" else r[j] for r in body], dtype=object))
    return Table(schema, tuple(data))


def write_csv(t: Table, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=",", quotechar='"', lineterminator="\n")
        w.writerow(t.schema.names)
        for row in t.rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


MinMaxParams = dict[str, tuple[float, float]]


def normalize_minmax(t: Table, params: MinMaxParams | None = None) -> tuple[Table, MinMaxParams]:
    """Affine-map numeric columns to [0, 1] using ``params`` or the table's own min/max.

    Constant columns are recorded as ``(min, min + 1)`` so they map to 0. The map is
    not clamped; applying another table's parameters can leave [0, 1].
    """
    if params is None:
        params = minmax_params(t)
    out = []
    for col, arr in zip(t.schema.columns, t.data):
        if col.kind is ColumnKind.NUMERIC:
            lo, hi = params[col.name]
            out.append((arr - lo) / (hi - lo))
        else:
            out.append(arr)
    return Table(t.schema, tuple(out)), params


def minmax_params(t: Table) -> MinMaxParams:
    params: MinMaxParams = {}
    for col, arr in zip(t.schema.columns, t.data):
        if col.kind is not ColumnKind.NUMERIC:
            continue
        finite = arr[~np.isnan(arr)]
        if finite.size == 0:
            raise DataError(f"column {col.name!r} has no values")
        lo, hi = float(finite.min()), float(finite.max())
        params[col.name] = (lo, hi) if hi > lo else (lo, lo + 1.0)
    return params


def column_entropy(t: Table, column: str, bins: int = DEFAULT_ENTROPY_BINS) -> float:
    """Shannon entropy (bits) of a column's empirical distribution.

    Numeric columns are discretized into ``bins`` equal-width bins over [min, max].
    """
    j = t.schema.index(column)
    arr = t.data[j]
    if t.schema.kinds[j] is ColumnKind.NUMERIC:
        values = arr[~np.isnan(arr)]
        if values.size == 0:
            raise DataError(f"column {column!r} is entirely missing")
        counts, _ = np.histogram(values, bins=bins)
    else:
        values = [v for v in arr if v is not None]
        if not values:
            raise DataError(f"column {column!r} is entirely missing")
        _, counts = np.unique(np.array(values, dtype=str), return_counts=True)
    counts = counts[counts > 0]
    p = counts / counts.sum()
    h = float(-(p * np.log2(p)).sum())
    return h if h > 0.0 else 0.0


def split_membership(t: Table, member_fraction: float, seed: int) -> tuple[Table, Table]:
    """Deterministic disjoint split into (members, non_members)."""
    n = t.n_rows
    if n < 2:
        raise DataError("need at least 2 rows to split")
    if not 0.0 < member_fraction < 1.0:
        raise DataError("member_fraction must lie in (0, 1)")
    n_members = min(max(math.floor(member_fraction * n + 0.5), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    members = np.sort(perm[:n_members])
    others = np.sort(perm[n_members:])
    return t.take(members), t.take(others)
