"""Identity disclosure risk from quasi-identifier equivalence classes."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .dataset import DataError, Table, check_same_schema

DEFAULT_LAMBDA = 1.0


@dataclass(frozen=True)
class EquivalenceClassIndex:
    sizes: dict[tuple, int]
    source: str = "sample"
    sampling_fraction: float | None = None

    def size_of(self, key: tuple) -> int:
        """Class size for ``key``; scaled estimates are ceil(sample size / f), at least 1."""
        if self.sampling_fraction is None:
            return self.sizes[key]
        return max(1, math.ceil(self.sizes[key] / self.sampling_fraction))

    def __len__(self) -> int:
        return len(self.sizes)


def _keys(t: Table, quasi: Sequence[str]) -> list[tuple]:
    if not quasi:
        raise DataError("at least one quasi-identifier is required")
    for q in quasi:
        if t.missing_mask(q).any():
            raise DataError(f"quasi-identifier {q!r} has missing values")
    cols = [t.column(q) for q in quasi]
    return [tuple(c[i].item() if hasattr(c[i], "item") else c[i] for c in cols) for i in range(t.n_rows)]


def equivalence_classes(t: Table, quasi: Sequence[str], source: str = "sample") -> EquivalenceClassIndex:
    """Group rows by their exact quasi-identifier tuple."""
    return EquivalenceClassIndex(dict(Counter(_keys(t, quasi))), source)


@dataclass(frozen=True)
class IdrConfig:
    quasi: tuple[str, ...]
    sensitive: tuple[str, ...]
    lam: float = DEFAULT_LAMBDA
    population: Table | None = None
    sampling_fraction: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise DataError("lambda must lie in [0, 1]")
        if set(self.quasi) & set(self.sensitive):
            raise DataError("quasi-identifier and sensitive columns must be disjoint")
        if not self.quasi:
            raise DataError("at least one quasi-identifier is required")
        if not self.sensitive:
            raise DataError("at least one sensitive column is required")
        if self.population is None:
            f = 1.0 if self.sampling_fraction is None else self.sampling_fraction
            if not 0.0 < f <= 1.0:
                raise DataError("sampling fraction must lie in (0, 1]")

    def to_json(self) -> dict[str, Any]:
        pop: dict[str, Any]
        if self.population is not None:
            pop = {"kind": "table", "rows": self.population.n_rows}
        else:
            pop = {"kind": "scaled_estimate",
                   "f": 1.0 if self.sampling_fraction is None else self.sampling_fraction}
        return {"quasi": list(self.quasi), "sensitive": list(self.sensitive), "lambda": self.lam,
                "population": pop, "match_rule": "exact"}


@dataclass(frozen=True)
class IdrReport:
    value: float
    contributions: np.ndarray
    matched: int
    learned: int
    config: IdrConfig


def idr(real: Table, synth: Table, cfg: IdrConfig) -> IdrReport:
    """Mean over real records of (1/F) * I * lambda * R.

    F is the population class size of the record's quasi tuple, I flags an exact
    quasi match in the synthetic data, and R flags that a quasi-matching
    synthetic record shares at least one sensitive value with the real one.
    """
    check_same_schema(real, synth)
    quasi, sensitive = list(cfg.quasi), list(cfg.sensitive)
    for name in quasi + sensitive:
        real.schema.index(name)

    real_keys = _keys(real, quasi)
    if cfg.population is not None:
        check_same_schema(real, cfg.population)
        pop = equivalence_classes(cfg.population, quasi, "population")
        absent = [k for k in set(real_keys) if k not in pop.sizes]
        if absent:
            raise DataError(f"quasi tuples missing from the population table: {sorted(absent, key=repr)[:5]}")
    else:
        f = 1.0 if cfg.sampling_fraction is None else cfg.sampling_fraction
        sample = equivalence_classes(real, quasi)
        pop = EquivalenceClassIndex(sample.sizes, "scaled_estimate", f)

    synth_sens: dict[tuple, list[tuple]] = {}
    sens_cols_s = [synth.column(c) for c in sensitive]
    for i, key in enumerate(_keys(synth, quasi)):
        synth_sens.setdefault(key, []).append(tuple(c[i] for c in sens_cols_s))
    sens_cols_r = [real.column(c) for c in sensitive]

    contrib = np.zeros(real.n_rows)
    matched = learned = 0
    for i, key in enumerate(real_keys):
        candidates = synth_sens.get(key)
        if not candidates:
            continue
        matched += 1
        mine = tuple(c[i] for c in sens_cols_r)
        if not any(any(_same(a, b) for a, b in zip(mine, other)) for other in candidates):
            continue
        learned += 1
        contrib[i] = (1.0 / pop.size_of(key)) * cfg.lam
    return IdrReport(float(contrib.mean()), contrib, matched, learned, cfg)


def _same(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return False
    if isinstance(a, float) and math.isnan(a):
        return False
    return a == b
