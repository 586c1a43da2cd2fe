"""Adversarial privacy metrics: threshold MIA, attribute disclosure and DOMIAS.

All attacks report through :class:`AttackReport`. Precision is ``None`` when
the attack predicts no positives.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata

from .dataset import ColumnKind, DataError, Table, check_same_schema, minmax_params
from .distance import DistanceKind, DistanceSpec, knn_between, nn_between, nn_within
from .similarity import median

DEFAULT_K = 5
SIGMA_FLOOR = 1e-6
ONE_HOT_SCALE = 1.0 / math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AttackReport:
    precision: float | None
    recall: float
    tp: int | None = None
    fp: int | None = None
    tn: int | None = None
    fn: int | None = None
    auroc: float | None = None
    accuracy: float | None = None
    details: dict[str, Any] = field(default_factory=dict, compare=False)

    def values(self) -> dict[str, float | None]:
        return {"precision": self.precision, "recall": self.recall,
                "auroc": self.auroc, "accuracy": self.accuracy}

    def confusion(self) -> dict[str, int | None]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def _labels(labels: Sequence[bool] | np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(labels).astype(bool)
    if y.shape != (n,):
        raise DataError(f"expected {n} membership labels, got {y.size}")
    return y


def binary_report(predicted: np.ndarray, labels: np.ndarray, **extra: Any) -> AttackReport:
    tp = int(np.sum(predicted & labels))
    fp = int(np.sum(predicted & ~labels))
    tn = int(np.sum(~predicted & ~labels))
    fn = int(np.sum(~predicted & labels))
    if tp + fn == 0:
        raise DataError("no true members among labels; recall is undefined")
    precision = tp / (tp + fp) if tp + fp > 0 else None
    return AttackReport(precision, tp / (tp + fn), tp, fp, tn, fn, **extra)


def auroc(scores: Sequence[float] | np.ndarray, labels: Sequence[bool] | np.ndarray) -> float:
    """Probability that a random member outscores a random non-member; ties earn half credit."""
    s = np.asarray(scores, dtype=np.float64)
    y = _labels(labels, s.size)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUROC needs both members and non-members")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


# --- threshold membership inference -------------------------------------------------


class ThresholdRule(str, Enum):
    FIXED = "fixed"
    MEDIAN_SYNTH_NN = "median_synth_nn"


@dataclass(frozen=True)
class MiaConfig:
    tau: float | None = None
    rule: ThresholdRule = ThresholdRule.FIXED
    spec: DistanceSpec | None = None

    def __post_init__(self) -> None:
        if self.rule is ThresholdRule.FIXED and (self.tau is None or not self.tau >= 0.0):
            raise DataError("a fixed threshold needs tau >= 0")


def resolve_tau(synth: Table, cfg: MiaConfig, spec: DistanceSpec, threads: int = 1) -> float:
    if cfg.rule is ThresholdRule.FIXED:
        return float(cfg.tau)
    if synth.n_rows < 2:
        raise DataError("the median-NN threshold rule needs at least 2 synthetic records")
    return median(nn_within(synth, spec, threads=threads).distances)


def candidate_dcr(synth: Table, candidates: Table, spec: DistanceSpec, threads: int = 1) -> np.ndarray:
    return nn_between(candidates, synth, spec, threads=threads).distances


def threshold_mia(synth: Table, candidates: Table, labels: Sequence[bool], cfg: MiaConfig,
                  threads: int = 1) -> AttackReport:
    """Predict a candidate as a member when its distance to the closest synthetic record is <= tau."""
    check_same_schema(synth, candidates)
    y = _labels(labels, candidates.n_rows)
    if not y.any():
        raise DataError("no true members among labels; recall is undefined")
    spec = cfg.spec or DistanceSpec(DistanceKind.GOWER)
    if spec.needs_ranges and spec.ranges is None:
        spec = spec.resolve(synth)
    tau = resolve_tau(synth, cfg, spec, threads)
    d = candidate_dcr(synth, candidates, spec, threads)
    predicted = d <= tau
    report = binary_report(predicted, y)
    report.details.update({"predicted": predicted, "tau": tau, "rule": cfg.rule.value, "spec": spec.to_json()})
    return report


# --- attribute disclosure -----------------------------------------------------------


@dataclass(frozen=True)
class AttrDisclosureConfig:
    k: int = DEFAULT_K
    levels: tuple[tuple[str, ...], ...] | None = None
    spec: DistanceSpec | None = None


def default_levels(t: Table, sensitive: str) -> tuple[tuple[str, ...], ...]:
    """Prefixes of the quasi-identifier list (all non-sensitive columns if none are flagged)."""
    qi = [n for n in t.schema.quasi_identifiers if n != sensitive]
    if not qi:
        qi = [n for n in t.schema.names if n != sensitive and n not in t.schema.sensitive_columns]
    if not qi:
        raise DataError("no columns available as adversary knowledge")
    return tuple(tuple(qi[:i]) for i in range(1, len(qi) + 1))


def _vote(neighbor_values: Sequence[str]) -> str:
    counts = Counter(neighbor_values)
    top = max(counts.values())
    tied = {v for v, c in counts.items() if c == top}
    # neighbours are ordered nearest first
    return next(v for v in neighbor_values if v in tied)


def macro_precision_recall(truth: Sequence[str], predicted: Sequence[str]) -> tuple[float, float, dict]:
    """Macro-averaged precision and recall over the classes present in ``truth``.

    A class that is never predicted contributes precision 0.
    """
    classes = sorted(set(truth))
    per_class = {}
    precisions, recalls = [], []
    for c in classes:
        tp = sum(1 for t, p in zip(truth, predicted) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, predicted) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, predicted) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn)
        precisions.append(prec)
        recalls.append(rec)
        per_class[c] = {"tp": tp, "fp": fp, "fn": fn, "precision": prec, "recall": rec}
    return float(np.mean(precisions)), float(np.mean(recalls)), per_class


@dataclass(frozen=True)
class AttrDisclosureResult:
    levels: tuple[tuple[str, ...], ...]
    reports: tuple[AttackReport, ...]
    mean_precision: float
    mean_recall: float
    k: int


def attribute_disclosure(synth: Table, targets: Table, sensitive: str,
                         cfg: AttrDisclosureConfig = AttrDisclosureConfig(),
                         threads: int = 1) -> AttrDisclosureResult:
    """k-NN majority-vote inference of a categorical sensitive column at several knowledge levels.

    Targets may have missing cells outside the known columns; rows whose true
    sensitive value is missing are predicted but not scored.
    """
    check_same_schema(synth, targets)
    if synth.schema.column(sensitive).kind is not ColumnKind.CATEGORICAL:
        raise DataError(f"sensitive column {sensitive!r} must be categorical")
    if not 1 <= cfg.k <= synth.n_rows:
        raise DataError(f"k={cfg.k} must lie in [1, {synth.n_rows}]")
    levels = cfg.levels or default_levels(synth, sensitive)
    names = synth.schema.names
    for level in levels:
        if not level:
            raise DataError("knowledge levels must be non-empty")
        if sensitive in level:
            raise DataError(f"knowledge level {list(level)} contains the sensitive column")
        unknown = set(level) - set(names)
        if unknown:
            raise DataError(f"unknown columns in knowledge level: {sorted(unknown)}")

    base = cfg.spec or DistanceSpec(DistanceKind.GOWER)
    synth_sens = synth.column(sensitive)
    if any(v is None for v in synth_sens):
        raise DataError("synthetic sensitive column contains missing values")
    truth_col = targets.column(sensitive)
    scored = np.array([v is not None for v in truth_col], dtype=bool)
    if not scored.any():
        raise DataError("no target has a known sensitive value to score against")
    truth = [v for v in truth_col if v is not None]

    reports = []
    for level in levels:
        cols = [names.index(c) for c in level]
        spec = base.select(cols)
        s_sub, t_sub = synth.select(level), targets.select(level)
        if spec.needs_ranges and spec.ranges is None:
            spec = spec.resolve(t_sub.concat(s_sub) if t_sub.missing_mask().any() else t_sub)
        idx, _ = knn_between(t_sub, s_sub, spec, cfg.k, threads=threads)
        predicted = [_vote([synth_sens[i] for i in row]) for row in idx]
        pred_scored = [p for p, ok in zip(predicted, scored) if ok]
        prec, rec, per_class = macro_precision_recall(truth, pred_scored)
        correct = sum(1 for t, p in zip(truth, pred_scored) if t == p)
        reports.append(AttackReport(
            prec, rec, accuracy=correct / len(truth),
            details={"level": list(level), "per_class": per_class, "averaging": "macro",
                     "spec": spec.to_json()}))
    return AttrDisclosureResult(
        tuple(tuple(lv) for lv in levels), tuple(reports),
        float(np.mean([r.precision for r in reports])),
        float(np.mean([r.recall for r in reports])), cfg.k)


# --- kernel density estimation and DOMIAS -------------------------------------------


class Encoder:
    """Maps table rows to a numeric matrix: numerics (optionally min-max scaled) and
    one-hot categoricals scaled by 1/sqrt(2).

    Parameters (ranges and category vocabularies) come from the table passed to
    :meth:`fit`; unseen categories encode as all zeros.
    """

    def __init__(self, normalize: bool = False) -> None:
        self.normalize = normalize
        self.params: dict[str, tuple[float, float]] = {}
        self.vocab: dict[str, list[str]] = {}
        self.names: list[str] = []
        self.kinds: list[ColumnKind] = []

    def fit(self, t: Table) -> "Encoder":
        t.require_complete("density-model input")
        self.names, self.kinds = t.schema.names, t.schema.kinds
        self.params = minmax_params(t) if self.normalize else {}
        self.vocab = {c.name: sorted(set(t.column(c.name))) for c in t.schema.columns
                      if c.kind is ColumnKind.CATEGORICAL}
        return self

    @property
    def dim(self) -> int:
        return sum(1 if k is ColumnKind.NUMERIC else len(self.vocab[n])
                   for n, k in zip(self.names, self.kinds))

    def transform(self, t: Table) -> np.ndarray:
        if t.schema.names != self.names or t.schema.kinds != self.kinds:
            raise DataError("table layout differs from the encoder's")
        t.require_complete("density-model input")
        blocks = []
        for name, kind in zip(self.names, self.kinds):
            col = t.column(name)
            if kind is ColumnKind.NUMERIC:
                if self.normalize:
                    lo, hi = self.params[name]
                    col = (col - lo) / (hi - lo)
                blocks.append(np.asarray(col, dtype=np.float64)[:, None])
            else:
                cats = self.vocab[name]
                lookup = {c: i for i, c in enumerate(cats)}
                block = np.zeros((len(col), len(cats)))
                for r, v in enumerate(col):
                    i = lookup.get(v)
                    if i is not None:
                        block[r, i] = ONE_HOT_SCALE
                blocks.append(block)
        return np.hstack(blocks) if blocks else np.empty((t.n_rows, 0))

    def to_json(self) -> dict[str, Any]:
        return {"numeric_minmax": {k: list(v) for k, v in self.params.items()} if self.normalize else None,
                "one_hot": self.vocab, "one_hot_scale": ONE_HOT_SCALE}


@dataclass(frozen=True)
class BandwidthRule:
    """``silverman`` or a fixed bandwidth ``h`` shared by every dimension."""

    fixed: float | None = None

    @classmethod
    def silverman(cls) -> "BandwidthRule":
        return cls(None)

    def __post_init__(self) -> None:
        if self.fixed is not None and not self.fixed > 0.0:
            raise DataError("fixed bandwidth must be positive")

    def to_json(self) -> dict[str, Any]:
        return {"rule": "silverman"} if self.fixed is None else {"rule": "fixed", "h": self.fixed}


@dataclass(frozen=True)
class DensityModel:
    """Product-Gaussian KDE over an encoded matrix."""

    points: np.ndarray
    bandwidths: np.ndarray
    encoder: Encoder

    def __post_init__(self) -> None:
        if not np.all(self.bandwidths > 0.0):
            raise DataError("bandwidths must be positive")

    def log_density_matrix(self, x: np.ndarray, block: int = 1024) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        h = self.bandwidths
        pts = self.points / h
        norm = -math.log(len(self.points)) - float(np.sum(np.log(h))) - len(h) * _LOG_SQRT_2PI
        out = np.empty(len(x))
        for lo in range(0, len(x), block):
            q = x[lo:lo + block] / h
            sq = (np.sum(q * q, axis=1)[:, None] - 2.0 * q @ pts.T
                  + np.sum(pts * pts, axis=1)[None, :])
            np.maximum(sq, 0.0, out=sq)
            out[lo:lo + block] = logsumexp(-0.5 * sq, axis=1) + norm
        return out

    def log_density(self, t: Table) -> np.ndarray:
        return self.log_density_matrix(self.encoder.transform(t))


def silverman_bandwidths(x: np.ndarray) -> np.ndarray:
    n, dim = x.shape
    sigma = np.std(x, axis=0, ddof=1) if n > 1 else np.zeros(dim)
    sigma = np.maximum(sigma, SIGMA_FLOOR)
    return sigma * (4.0 / ((dim + 2) * n)) ** (1.0 / (dim + 4))


def kde_fit(t: Table, bandwidth_rule: BandwidthRule = BandwidthRule(),
            encoder: Encoder | None = None) -> DensityModel:
    """Fit a product-Gaussian KDE; ``encoder`` defaults to one fitted on ``t`` itself."""
    if t.n_rows == 0:
        raise DataError("cannot fit a density to an empty table")
    enc = encoder or Encoder().fit(t)
    x = enc.transform(t)
    if not np.all(np.isfinite(x)):
        raise DataError("encoded matrix has non-finite entries")
    if bandwidth_rule.fixed is None:
        h = silverman_bandwidths(x)
    else:
        h = np.full(x.shape[1], float(bandwidth_rule.fixed))
    return DensityModel(x, h, enc)


def domias_scores(synth: Table, reference: Table, candidates: Table,
                  bandwidth_rule: BandwidthRule = BandwidthRule()) -> np.ndarray:
    """log p_synth(x) - log p_reference(x), both densities on the reference's encoding."""
    check_same_schema(synth, reference, candidates)
    if synth.n_rows == 0 or reference.n_rows == 0:
        raise DataError("DOMIAS needs non-empty synthetic and reference tables")
    enc = Encoder(normalize=True).fit(reference)
    p_s = kde_fit(synth, bandwidth_rule, enc)
    p_a = kde_fit(reference, bandwidth_rule, enc)
    x = enc.transform(candidates)
    return p_s.log_density_matrix(x) - p_a.log_density_matrix(x)


def domias(synth: Table, reference: Table, candidates: Table, labels: Sequence[bool],
           bandwidth_rule: BandwidthRule = BandwidthRule()) -> AttackReport:
    """Density-ratio membership inference.

    Reports AUROC of the scores and the confusion at the median-score threshold
    (member iff score > median of all candidate scores).
    """
    y = _labels(labels, candidates.n_rows)
    if y.all() or not y.any():
        raise DataError("DOMIAS needs both members and non-members among the candidates")
    scores = domias_scores(synth, reference, candidates, bandwidth_rule)
    area = auroc(scores, y)
    threshold = median(scores)
    predicted = scores > threshold
    accuracy = float(np.mean(predicted == y))
    report = binary_report(predicted, y, auroc=area, accuracy=accuracy)
    report.details.update({"threshold": threshold, "bandwidth": bandwidth_rule.to_json(),
                           "encoding": Encoder(normalize=True).fit(reference).to_json(), "backend": "gaussian_kde"})
    return report
