from __future__ import annotations

import math

import numpy as np
import pytest

from synthpriv.dataset import ColumnKind, Schema, Table


def numeric_table(values, name="x") -> Table:
    """One-column numeric table, or several columns from a 2-D array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    names = [name] if arr.shape[1] == 1 else [f"{name}{j}" for j in range(arr.shape[1])]
    schema = Schema.of(*[(n, "numeric") for n in names])
    return Table(schema, tuple(arr[:, j].copy() for j in range(arr.shape[1])))


def random_mixed(rng: np.random.Generator, n: int, kinds: list[ColumnKind], levels: int = 3,
                 integer: bool = False) -> Table:
    """Random table; small integer numerics and few levels make ties likely."""
    pairs, data = [], []
    for j, kind in enumerate(kinds):
        pairs.append((f"c{j}", kind))
        if kind is ColumnKind.NUMERIC:
            data.append(rng.integers(0, 5, n).astype(float) if integer else rng.normal(size=n))
        else:
            data.append(np.array([f"v{v}" for v in rng.integers(0, levels, n)], dtype=object))
    return Table(Schema.of(*pairs), tuple(data))


def oracle_distance(a, b, kinds, kind, weights=None, ranges=None, scaled=False) -> float:
    """Straight transcription of the distance formulas, one record pair at a time."""
    w = weights or [1.0] * len(kinds)
    total = 0.0
    for j, k in enumerate(kinds):
        if k is ColumnKind.NUMERIC:
            if kind == "gower":
                total += w[j] * (abs(a[j] - b[j]) / ranges[j])
            else:
                diff = a[j] - b[j]
                if scaled:
                    diff = diff / ranges[j]
                total += w[j] * (diff * diff)
        else:
            total += w[j] * (1.0 if a[j] != b[j] else 0.0)
    if kind == "gower":
        return total / sum(w)
    if kind == "hamming":
        return total
    return math.sqrt(total)


def oracle_nn(queries, targets, dist, exclude_self=False):
    """Double loop; the first (smallest-index) minimum wins."""
    out = []
    for i, q in enumerate(queries):
        best, best_j = math.inf, -1
        for j, t in enumerate(targets):
            if exclude_self and i == j:
                continue
            d = dist(q, t)
            if d < best:
                best, best_j = d, j
        out.append((best_j, best))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
