"""CAIR rubric scoring: sheet validation, aggregation over evaluators and error propagation.

Each evaluator scores a metric on 16 dimensions (four per principle) using the
grid {1, 1.5, ..., 4}. With several evaluators, each dimension mean carries a
standard error (sample standard deviation over evaluators divided by sqrt(m));
the overall score's error is sqrt(sum of squared dimension errors) / 16.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Mapping, Sequence
from xml.sax.saxutils import escape

PRINCIPLES: tuple[tuple[str, str], ...] = (
    ("C", "Comparability"),
    ("A", "Applicability"),
    ("I", "Interpretability"),
    ("R", "Representativeness"),
)

DIMENSIONS: tuple[tuple[str, str], ...] = (
    ("C1", "Scale"),
    ("C2", "Metric bounds"),
    ("C3", "Data type agnostic"),
    ("C4", "Cross-domain relevance"),
    ("A1", "Heterogeneity"),
    ("A2", "Diverse generation methods"),
    ("A3", "Performance"),
    ("A4", "Implementation"),
    ("I1", "Explainability"),
    ("I2", "Understandability"),
    ("I3", "Visualization"),
    ("I4", "Granularity"),
    ("R1", "Anomalies"),
    ("R2", "Coverage"),
    ("R3", "Reproducibility"),
    ("R4", "Precision"),
)

DIMENSION_IDS: tuple[str, ...] = tuple(d for d, _ in DIMENSIONS)
N_DIMENSIONS = len(DIMENSION_IDS)
SCORE_GRID: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
SCORE_MIN, SCORE_MAX = SCORE_GRID[0], SCORE_GRID[-1]


class SheetError(ValueError):
    """A score sheet or set of sheets violates the rubric."""


def principle_of(dimension: str) -> str:
    for key, name in PRINCIPLES:
        if dimension.startswith(key):
            return name
    raise SheetError(f"unknown dimension {dimension!r}")


def dimensions_of(principle: str) -> list[str]:
    key = next(k for k, name in PRINCIPLES if name == principle)
    return [d for d in DIMENSION_IDS if d.startswith(key)]


@dataclass(frozen=True)
class ScoreSheet:
    metric: str
    evaluator: str
    scores: tuple[float, ...]  # rubric order C1..R4

    def score(self, dimension: str) -> float:
        return self.scores[DIMENSION_IDS.index(dimension)]

    def to_json(self) -> dict[str, Any]:
        return {"metric": self.metric, "evaluator": self.evaluator,
                "scores": {d: _num(s) for d, s in zip(DIMENSION_IDS, self.scores)}}


def _num(x: float) -> float | int:
    return int(x) if float(x).is_integer() else x


def _on_grid(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SheetError(f"score {value!r} is not a number")
    v = float(value)
    if v not in SCORE_GRID:
        raise SheetError(f"score {value!r} is not on the grid {list(SCORE_GRID)}")
    return v


def validate_sheet(raw: Mapping[str, Any] | Sequence[tuple[str, Any]]) -> ScoreSheet:
    """Validate a raw sheet ``{"metric", "evaluator", "scores": {dim: value}}``.

    ``scores`` may also be a sequence of (dimension, value) pairs, which lets
    duplicate dimensions be detected.
    """
    try:
        metric, evaluator, scores = raw["metric"], raw["evaluator"], raw["scores"]
    except (KeyError, TypeError) as exc:
        raise SheetError(f"sheet needs metric, evaluator and scores: {exc}") from exc
    pairs = list(scores.items()) if isinstance(scores, Mapping) else [tuple(p) for p in scores]
    seen: dict[str, float] = {}
    for dim, value in pairs:
        if dim not in DIMENSION_IDS:
            raise SheetError(f"unknown dimension {dim!r}")
        if dim in seen:
            raise SheetError(f"duplicate dimension {dim!r}")
        seen[dim] = _on_grid(value)
    missing = [d for d in DIMENSION_IDS if d not in seen]
    if missing:
        raise SheetError(f"missing dimensions: {missing}")
    return ScoreSheet(str(metric), str(evaluator), tuple(seen[d] for d in DIMENSION_IDS))


@dataclass(frozen=True)
class CairAssessment:
    metric: str
    evaluators: tuple[str, ...]
    dimension_means: tuple[float, ...]
    dimension_stderr: tuple[float, ...] | None  # None when m == 1

    @property
    def m(self) -> int:
        return len(self.evaluators)

    @property
    def score(self) -> float:
        return math.fsum(self.dimension_means) / N_DIMENSIONS

    @property
    def stderr(self) -> float | None:
        if self.dimension_stderr is None:
            return None
        return math.sqrt(math.fsum(s * s for s in self.dimension_stderr)) / N_DIMENSIONS

    def principle(self, name: str) -> tuple[float, float | None]:
        idx = [DIMENSION_IDS.index(d) for d in dimensions_of(name)]
        mean = math.fsum(self.dimension_means[i] for i in idx) / len(idx)
        if self.dimension_stderr is None:
            return mean, None
        err = math.sqrt(math.fsum(self.dimension_stderr[i] ** 2 for i in idx)) / len(idx)
        return mean, err


def cair_single(sheet: ScoreSheet) -> CairAssessment:
    """Unweighted mean of one evaluator's 16 scores; no standard error."""
    return CairAssessment(sheet.metric, (sheet.evaluator,), tuple(sheet.scores), None)


def cair_aggregate(sheets: Sequence[ScoreSheet]) -> CairAssessment:
    """Aggregate several evaluators' sheets for one metric."""
    if not sheets:
        raise SheetError("at least one sheet is required")
    metrics = {s.metric for s in sheets}
    if len(metrics) > 1:
        raise SheetError(f"sheets mix metrics: {sorted(metrics)}")
    ids = [s.evaluator for s in sheets]
    if len(set(ids)) != len(ids):
        raise SheetError(f"duplicate evaluator ids: {ids}")
    if len(sheets) == 1:
        return cair_single(sheets[0])
    m = len(sheets)
    means, errs = [], []
    for i in range(N_DIMENSIONS):
        col = [s.scores[i] for s in sheets]
        mu = math.fsum(col) / m
        var = math.fsum((x - mu) ** 2 for x in col) / (m - 1)
        means.append(mu)
        errs.append(math.sqrt(var) / math.sqrt(m))
    return CairAssessment(sheets[0].metric, tuple(ids), tuple(means), tuple(errs))


def round_half_up(x: float, places: int = 2) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def _fmt(x: float | None) -> str | None:
    return None if x is None else f"{round_half_up(x):.2f}"


def granularity_views(a: CairAssessment) -> dict[str, Any]:
    """Overall, per-principle and per-dimension views with full-precision and rendered numbers."""
    overall = {"score": a.score, "stderr": a.stderr, "display": _display(a.score, a.stderr)}
    principles = []
    for _, name in PRINCIPLES:
        mean, err = a.principle(name)
        principles.append({"principle": name, "mean": mean, "stderr": err,
                           "dimensions": dimensions_of(name), "display": _display(mean, err)})
    dims = []
    for i, (dim, label) in enumerate(DIMENSIONS):
        err = None if a.dimension_stderr is None else a.dimension_stderr[i]
        dims.append({"dimension": dim, "name": label, "principle": principle_of(dim),
                     "mean": a.dimension_means[i], "stderr": err,
                     "display": _display(a.dimension_means[i], err)})
    return {"metric": a.metric, "evaluators": list(a.evaluators), "m": a.m,
            "overall": overall, "per_principle": principles, "per_dimension": dims}


def _display(score: float, err: float | None) -> str:
    return _fmt(score) if err is None else f"{_fmt(score)} ± {_fmt(err)}"


def assessment_from_json(doc: Mapping[str, Any]) -> CairAssessment:
    """Rebuild an assessment from the document written by :func:`granularity_views`."""
    try:
        dims = doc["per_dimension"]
        order = [d["dimension"] for d in dims]
        if order != list(DIMENSION_IDS):
            raise SheetError("per-dimension view is not in rubric order")
        means = tuple(float(d["mean"]) for d in dims)
        errs = [d.get("stderr") for d in dims]
        stderr = None if any(e is None for e in errs) else tuple(float(e) for e in errs)
        return CairAssessment(str(doc["metric"]), tuple(doc["evaluators"]), means, stderr)
    except (KeyError, TypeError) as exc:
        raise SheetError(f"malformed assessment document: {exc}") from exc


# --- radar chart ---------------------------------------------------------------------

SVG_SIZE = 600
_CENTER = SVG_SIZE / 2
_R_MIN, _R_MAX = 40.0, 240.0


def radar_data(a: CairAssessment) -> list[tuple[str, float]]:
    return list(zip(DIMENSION_IDS, a.dimension_means))


def radar_radius(value: float) -> float:
    """Map a score in [1, 4] linearly onto [R_MIN, R_MAX]."""
    return _R_MIN + (value - SCORE_MIN) / (SCORE_MAX - SCORE_MIN) * (_R_MAX - _R_MIN)


def _vertex(i: int, r: float) -> tuple[float, float]:
    angle = 2.0 * math.pi * i / N_DIMENSIONS - math.pi / 2.0
    return _CENTER + r * math.cos(angle), _CENTER + r * math.sin(angle)


def _pts(points: Sequence[tuple[float, float]]) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in points)


def radar_svg(a: CairAssessment) -> str:
    """Stand-alone SVG 1.1 radar plot of the 16 dimension means (600x600)."""
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f'<title>CAIR {escape(a.metric)}</title>',
        '<g class="grid" fill="none" stroke="#cccccc" stroke-width="1">',
    ]
    for level in SCORE_GRID[::2]:
        ring = [_vertex(i, radar_radius(level)) for i in range(N_DIMENSIONS)]
        out.append(f'<polygon points="{_pts(ring)}"/>')
    out.append("</g>")
    out.append('<g class="axes" stroke="#999999" stroke-width="1">')
    for i, dim in enumerate(DIMENSION_IDS):
        x, y = _vertex(i, _R_MAX)
        out.append(f'<line class="axis" data-dimension="{dim}" x1="{_CENTER:.3f}" y1="{_CENTER:.3f}" '
                   f'x2="{x:.3f}" y2="{y:.3f}"/>')
    out.append("</g>")
    out.append('<g class="labels" font-family="sans-serif" font-size="12" text-anchor="middle">')
    for i, dim in enumerate(DIMENSION_IDS):
        x, y = _vertex(i, _R_MAX + 20.0)
        out.append(f'<text x="{x:.3f}" y="{y:.3f}">{dim}</text>')
    out.append("</g>")
    poly = [_vertex(i, radar_radius(v)) for i, v in enumerate(a.dimension_means)]
    out.append(f'<polygon class="scores" points="{_pts(poly)}" fill="#1f77b4" fill-opacity="0.3" '
               'stroke="#1f77b4" stroke-width="2"/>')
    score = _display(a.score, a.stderr)
    out.append(f'<text x="{_CENTER:.3f}" y="{SVG_SIZE - 10}" font-family="sans-serif" font-size="14" '
               f'text-anchor="middle">{escape(a.metric)}: {score}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
