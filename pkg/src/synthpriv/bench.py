"""Scaling benchmark for the nearest-neighbour kernel."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import ColumnKind, DataError, Schema, Table
from .distance import DistanceKind, DistanceSpec, nn_between

CATEGORIES = tuple("abcdefgh")


def random_mixed_table(n: int, columns: int, rng: np.random.Generator) -> Table:
    """Alternating numeric (standard normal) and categorical (8 levels) columns."""
    pairs, data = [], []
    for j in range(columns):
        if j % 2 == 0:
            pairs.append((f"num{j}", ColumnKind.NUMERIC))
            data.append(rng.normal(size=n))
        else:
            pairs.append((f"cat{j}", ColumnKind.CATEGORICAL))
            data.append(np.array(CATEGORIES, dtype=object)[rng.integers(0, len(CATEGORIES), n)])
    return Table(Schema.of(*pairs), tuple(data))


@dataclass(frozen=True)
class BenchResult:
    sizes: tuple[int, ...]
    seconds: tuple[float, ...]
    slope: float
    columns: int
    seed: int


def loglog_slope(sizes: Sequence[int], seconds: Sequence[float]) -> float:
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


def run_bench(sizes: Sequence[int], columns: int = 10, seed: int = 0, repeats: int = 3,
              threads: int = 1) -> BenchResult:
    """Time ``nn_between`` on random n x n mixed tables; the best of ``repeats`` is kept."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise DataError("need at least two sizes to fit a slope")
    if min(sizes) < 2:
        raise DataError("every size must be at least 2 rows")
    if columns < 1:
        raise DataError("need at least one column")
    seconds = []
    for i, n in enumerate(sizes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        queries = random_mixed_table(n, columns, rng)
        targets = random_mixed_table(n, columns, rng)
        spec = DistanceSpec(DistanceKind.GOWER).resolve(targets)
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            nn_between(queries, targets, spec, threads=threads)
            best = min(best, time.perf_counter() - t0)
        seconds.append(best)
    return BenchResult(tuple(sizes), tuple(seconds), loglog_slope(sizes, seconds), columns, seed)
