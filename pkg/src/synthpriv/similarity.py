"""Similarity-based privacy metrics: distance to closest record and epsilon-identifiability."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from .dataset import DataError, Table, check_same_schema
from .distance import (
    DistanceKind,
    DistanceSpec,
    WeightVector,
    inverse_entropy_weights,
    nn_between,
    nn_within,
)


class Aggregate(str, Enum):
    MEAN = "mean"
    MEDIAN = "median"


class Orientation(str, Enum):
    PER_TRUE_RECORD = "per_true_record"
    PER_SYNTHETIC_RECORD = "per_synthetic_record"


@dataclass(frozen=True)
class DcrReport:
    aggregate: Aggregate
    value: float
    distances: np.ndarray
    spec: DistanceSpec

    def details(self) -> dict[str, Any]:
        d = self.distances
        return {"n_synthetic": int(d.size), "min": float(d.min()), "max": float(d.max()),
                "per_record": d.tolist()}


@dataclass(frozen=True)
class EpsIdReport:
    value: float
    orientation: Orientation
    weights: WeightVector
    violations: int
    total: int
    spec: DistanceSpec


def median(values: np.ndarray) -> float:
    """Median; an even-length list averages its two middle order statistics."""
    s = np.sort(np.asarray(values, dtype=np.float64))
    n = s.size
    mid = n // 2
    return float(s[mid]) if n % 2 else float((s[mid - 1] + s[mid]) / 2.0)


def dcr(real: Table, synth: Table, spec: DistanceSpec | None = None,
        aggregate: Aggregate = Aggregate.MEAN, threads: int = 1) -> DcrReport:
    """Mean or median distance from each synthetic record to its closest real record.

    The default spec is Gower with numeric ranges from ``real``.
    """
    check_same_schema(real, synth)
    if real.n_rows == 0 or synth.n_rows == 0:
        raise DataError("DCR needs non-empty real and synthetic tables")
    if spec is None:
        spec = DistanceSpec(DistanceKind.GOWER)
    if spec.needs_ranges and spec.ranges is None:
        spec = spec.resolve(real)
    d = nn_between(synth, real, spec, threads=threads).distances
    value = float(np.mean(d)) if aggregate is Aggregate.MEAN else median(d)
    return DcrReport(Aggregate(aggregate), value, d, spec)


def epsilon_identifiability(real: Table, synth: Table, weights: WeightVector | None = None,
                            orientation: Orientation = Orientation.PER_TRUE_RECORD,
                            threads: int = 1) -> EpsIdReport:
    """Share of records whose nearest synthetic neighbour is strictly closer than their nearest real one.

    The distance is weighted Euclidean on numeric columns plus weighted mismatch on
    categorical columns, with inverse-entropy weights of ``real`` by default.
    """
    check_same_schema(real, synth)
    if real.n_rows < 2:
        raise DataError("epsilon-identifiability needs at least 2 real records")
    if synth.n_rows < 1:
        raise DataError("synthetic table is empty")
    if weights is None:
        weights = inverse_entropy_weights(real)
    spec = DistanceSpec(DistanceKind.MIXED_EUCLIDEAN, weights)
    within = nn_within(real, spec, threads=threads).distances
    if orientation is Orientation.PER_TRUE_RECORD:
        to_synth = nn_between(real, synth, spec, threads=threads).distances
        hits = to_synth < within
    else:
        nn = nn_between(synth, real, spec, threads=threads)
        hits = nn.distances < within[nn.indices]
    violations, total = int(hits.sum()), int(hits.size)
    return EpsIdReport(violations / total, Orientation(orientation), weights, violations, total, spec)
