"""Record distances over mixed columns and exact nearest-neighbour kernels.

Every kernel is brute force: for each query row the distances to all target
rows are accumulated column by column, in schema order, with exactly the same
floating-point operations as :func:`record_distance`. The per-query minimum is
then taken in target-index order, so the smallest index wins ties and results
do not depend on how query blocks are spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .dataset import (
    DEFAULT_ENTROPY_BINS,
    ColumnKind,
    DataError,
    Schema,
    Table,
    check_same_schema,
    column_entropy,
    minmax_params,
)

# rows per query block; bounds the (block x targets) scratch matrix
BLOCK_ROWS = 256


class DistanceKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HAMMING = "hamming"
    GOWER = "gower"
    # sqrt(sum_num w*(a-b)^2 + sum_cat w*[a != b]); used by epsilon-identifiability
    MIXED_EUCLIDEAN = "mixed_euclidean"


class Normalization(str, Enum):
    NONE = "none"
    MINMAX_OF_REFERENCE = "minmax_reference"


class WeightProvenance(str, Enum):
    USER_SUPPLIED = "user"
    INVERSE_ENTROPY = "inverse_entropy"


@dataclass(frozen=True)
class WeightVector:
    weights: tuple[float, ...]
    provenance: WeightProvenance = WeightProvenance.USER_SUPPLIED
    excluded: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not self.excluded:
            object.__setattr__(self, "excluded", tuple(x == 0.0 for x in w))
        if not all(math.isfinite(x) and x >= 0.0 for x in w):
            raise DataError(f"weights must be finite and non-negative: {w}")
        if not any(x > 0.0 for x in w):
            raise DataError("at least one weight must be strictly positive")

    def __len__(self) -> int:
        return len(self.weights)

    def subset(self, indices: Sequence[int]) -> "WeightVector":
        return WeightVector(tuple(self.weights[i] for i in indices), self.provenance,
                            tuple(self.excluded[i] for i in indices))

    def to_json(self) -> dict[str, Any]:
        return {"weights": list(self.weights), "provenance": self.provenance.value,
                "excluded": list(self.excluded)}


@dataclass(frozen=True)
class DistanceSpec:
    """Distance semantics over a schema.

    ``ranges`` holds per-column numeric ranges taken from the reference table.
    They are required for Gower and for ``MINMAX_OF_REFERENCE``; use
    :meth:`resolve` to fill them in from a reference table.
    """

    kind: DistanceKind = DistanceKind.GOWER
    weights: WeightVector | None = None
    normalization: Normalization = Normalization.NONE
    ranges: tuple[float, ...] | None = field(default=None, compare=True)

    @property
    def needs_ranges(self) -> bool:
        return self.kind is DistanceKind.GOWER or self.normalization is Normalization.MINMAX_OF_REFERENCE

    def resolve(self, reference: Table) -> "DistanceSpec":
        """Return a copy with numeric ranges taken from ``reference``.

        Constant columns get range 1 so their per-column distance stays finite.
        """
        if not self.needs_ranges:
            return self
        params = minmax_params(reference)
        ranges = tuple(params[c.name][1] - params[c.name][0] if c.kind is ColumnKind.NUMERIC else 1.0
                       for c in reference.schema.columns)
        return replace(self, ranges=ranges)

    def validate(self, schema: Schema) -> None:
        kinds = set(schema.kinds)
        if self.kind is DistanceKind.EUCLIDEAN and kinds != {ColumnKind.NUMERIC}:
            raise DataError("Euclidean distance requires all-numeric columns")
        if self.kind is DistanceKind.HAMMING and kinds != {ColumnKind.CATEGORICAL}:
            raise DataError("Hamming distance requires all-categorical columns")
        if self.weights is not None and len(self.weights) != len(schema):
            raise DataError(f"weight vector has {len(self.weights)} entries, schema has {len(schema)} columns")
        if self.needs_ranges:
            if self.ranges is None:
                raise DataError(f"{self.kind.value} distance needs reference ranges; call resolve()")
            if len(self.ranges) != len(schema):
                raise DataError("range vector length does not match schema")

    def select(self, indices: Sequence[int]) -> "DistanceSpec":
        """Restrict the spec to a subset of columns."""
        return replace(
            self,
            weights=None if self.weights is None else self.weights.subset(indices),
            ranges=None if self.ranges is None else tuple(self.ranges[i] for i in indices),
        )

    def column_weights(self, n: int) -> list[float]:
        return [1.0] * n if self.weights is None else list(self.weights.weights)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "weights": None if self.weights is None else self.weights.to_json(),
            "normalization": self.normalization.value,
            "ranges": None if self.ranges is None else list(self.ranges),
        }


@dataclass(frozen=True)
class NnDistances:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def record_distance(a: Sequence[Any], b: Sequence[Any], spec: DistanceSpec, schema: Schema) -> float:
    """Distance between two records under ``spec``."""
    spec.validate(schema)
    if len(a) != len(schema) or len(b) != len(schema):
        raise DataError("record length does not match schema")
    weights = spec.column_weights(len(schema))
    scaled = spec.normalization is Normalization.MINMAX_OF_REFERENCE
    acc = 0.0
    for j, kind in enumerate(schema.kinds):
        x, y = a[j], b[j]
        if x is None or y is None or (kind is ColumnKind.NUMERIC and (math.isnan(x) or math.isnan(y))):
            raise DataError("missing value in record")
        w = weights[j]
        if kind is ColumnKind.NUMERIC:
            if spec.kind is DistanceKind.GOWER:
                acc += w * (abs(float(x) - float(y)) / spec.ranges[j])
            else:
                d = float(x) - float(y)
                if scaled:
                    d = d / spec.ranges[j]
                acc += w * (d * d)
        else:
            acc += w * (1.0 if x != y else 0.0)
    if spec.kind is DistanceKind.GOWER:
        return acc / sum(weights)
    if spec.kind is DistanceKind.HAMMING:
        return acc
    return math.sqrt(acc)


def inverse_entropy_weights(t: Table, bins: int = DEFAULT_ENTROPY_BINS) -> WeightVector:
    """Per-column weights 1/H; zero-entropy columns get weight 0 and are flagged excluded."""
    ent = [column_entropy(t, name, bins) for name in t.schema.names]
    if all(h == 0.0 for h in ent):
        raise DataError("every column has zero entropy; no usable weights")
    weights = tuple(0.0 if h == 0.0 else 1.0 / h for h in ent)
    return WeightVector(weights, WeightProvenance.INVERSE_ENTROPY, tuple(h == 0.0 for h in ent))


class _Encoded:
    """Numeric columns as float arrays and categorical columns as shared integer codes."""

    def __init__(self, queries: Table, targets: Table):
        self.q_cols: list[np.ndarray] = []
        self.t_cols: list[np.ndarray] = []
        for kind, qa, ta in zip(queries.schema.kinds, queries.data, targets.data):
            if kind is ColumnKind.NUMERIC:
                self.q_cols.append(qa)
                self.t_cols.append(ta)
            else:
                vocab: dict[str, int] = {}
                t_codes = np.fromiter((vocab.setdefault(v, len(vocab)) for v in ta), dtype=np.int64,
                                      count=len(ta))
                q_codes = np.fromiter((vocab.setdefault(v, len(vocab)) for v in qa), dtype=np.int64,
                                      count=len(qa))
                self.q_cols.append(q_codes)
                self.t_cols.append(t_codes)


def _block_distances(enc: _Encoded, lo: int, hi: int, spec: DistanceSpec, schema: Schema,
                     weights: list[float]) -> np.ndarray:
    m = len(enc.t_cols[0])
    acc = np.zeros((hi - lo, m), dtype=np.float64)
    scaled = spec.normalization is Normalization.MINMAX_OF_REFERENCE
    tmp = np.empty_like(acc)
    for j, kind in enumerate(schema.kinds):
        w = weights[j]
        q = enc.q_cols[j][lo:hi, None]
        t = enc.t_cols[j][None, :]
        if kind is ColumnKind.NUMERIC:
            np.subtract(q, t, out=tmp)
            if spec.kind is DistanceKind.GOWER:
                np.abs(tmp, out=tmp)
                np.divide(tmp, spec.ranges[j], out=tmp)
            else:
                if scaled:
                    np.divide(tmp, spec.ranges[j], out=tmp)
                np.multiply(tmp, tmp, out=tmp)
            np.multiply(tmp, w, out=tmp)
        else:
            np.not_equal(q, t, out=tmp, casting="unsafe")
            np.multiply(tmp, w, out=tmp)
        np.add(acc, tmp, out=acc)
    if spec.kind is DistanceKind.GOWER:
        np.divide(acc, sum(weights), out=acc)
    elif spec.kind is not DistanceKind.HAMMING:
        np.sqrt(acc, out=acc)
    return acc


def _nn(queries: Table, targets: Table, spec: DistanceSpec, exclude_self: bool,
        threads: int, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    check_same_schema(queries, targets)
    schema = queries.schema
    spec.validate(schema)
    queries.require_complete("query table")
    targets.require_complete("target table")
    n, m = queries.n_rows, targets.n_rows
    if m == 0:
        raise DataError("target table is empty")
    enc = _Encoded(queries, targets)
    weights = spec.column_weights(len(schema))
    idx_out = np.empty((n, k), dtype=np.int64)
    dist_out = np.empty((n, k), dtype=np.float64)

    def work(lo: int) -> None:
        hi = min(lo + BLOCK_ROWS, n)
        d = _block_distances(enc, lo, hi, spec, schema, weights)
        if exclude_self:
            rows = np.arange(hi - lo)
            d[rows, rows + lo] = np.inf
        if k == 1:
            best = np.argmin(d, axis=1)
            idx_out[lo:hi, 0] = best
            dist_out[lo:hi, 0] = d[np.arange(hi - lo), best]
        else:
            order = np.argsort(d, axis=1, kind="stable")[:, :k]
            idx_out[lo:hi] = order
            dist_out[lo:hi] = np.take_along_axis(d, order, axis=1)

    starts = range(0, n, BLOCK_ROWS)
    if threads > 1 and n > BLOCK_ROWS:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return idx_out, dist_out


def nn_between(queries: Table, targets: Table, spec: DistanceSpec, threads: int = 1) -> NnDistances:
    """Nearest target row for every query row (exact; ties go to the smallest index)."""
    idx, dist = _nn(queries, targets, spec, exclude_self=False, threads=threads)
    return NnDistances(idx[:, 0], dist[:, 0])


def nn_within(t: Table, spec: DistanceSpec, threads: int = 1) -> NnDistances:
    """Nearest *other* row of ``t`` for every row; duplicates are at distance 0."""
    if t.n_rows < 2:
        raise DataError("nn_within needs at least 2 rows")
    idx, dist = _nn(t, t, spec, exclude_self=True, threads=threads)
    return NnDistances(idx[:, 0], dist[:, 0])


def knn_between(queries: Table, targets: Table, spec: DistanceSpec, k: int,
                threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the ``k`` nearest targets per query, nearest first."""
    if not 1 <= k <= targets.n_rows:
        raise DataError(f"k={k} must lie in [1, {targets.n_rows}]")
    return _nn(queries, targets, spec, exclude_self=False, threads=threads, k=k)


def spec_from_json(doc: dict[str, Any] | None, reference: Table) -> DistanceSpec:
    """Build a resolved spec from a config fragment.

    ``weights`` may be omitted, a list of numbers, or ``"inverse_entropy"``.
    """
    doc = dict(doc or {})
    kind = DistanceKind(doc.get("kind", DistanceKind.GOWER.value))
    norm = Normalization(doc.get("normalization", Normalization.NONE.value))
    w = doc.get("weights")
    if w is None:
        weights = None
    elif w == "inverse_entropy":
        weights = inverse_entropy_weights(reference, int(doc.get("entropy_bins", DEFAULT_ENTROPY_BINS)))
    elif isinstance(w, dict):
        weights = WeightVector(tuple(w["weights"]))
    else:
        weights = WeightVector(tuple(w))
    return DistanceSpec(kind, weights, norm).resolve(reference)
