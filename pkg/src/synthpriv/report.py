"""Metric report envelope, canonical JSON, config digests and the bundled CAIR fixtures."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .cair import DIMENSION_IDS, ScoreSheet, validate_sheet

SIGNIFICANT_DIGITS = 12


class ReportError(ValueError):
    pass


def _canon(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ReportError(f"non-finite value {obj!r} cannot be serialized")
        v = float(f"{obj:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if v == 0.0 else v
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _canon(obj.item())
    if hasattr(obj, "tolist"):
        return _canon(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if hasattr(obj, "value") and isinstance(obj.value, str):  # enums
        return obj.value
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    """Sorted keys, no insignificant whitespace, reals to at most 12 significant digits."""
    return json.dumps(_canon(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False)


def config_digest(metric: str, config: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json({"metric": metric, "config": config}).encode("utf-8")).hexdigest()


# declared output bounds per value name; None = unbounded above
UNIT_INTERVAL = (0.0, 1.0)
BOUNDS: dict[str, dict[str, tuple[float, float | None]]] = {
    "dcr": {"value": (0.0, None)},
    "eps_id": {"value": UNIT_INTERVAL},
    "idr": {"value": UNIT_INTERVAL},
    "t_mia": {"precision": UNIT_INTERVAL, "recall": UNIT_INTERVAL},
    "attr_disclosure": {"precision": UNIT_INTERVAL, "recall": UNIT_INTERVAL},
    "domias": {"auroc": UNIT_INTERVAL, "accuracy": UNIT_INTERVAL,
               "precision": UNIT_INTERVAL, "recall": UNIT_INTERVAL},
}


@dataclass(frozen=True)
class MetricReport:
    metric: str
    values: dict[str, float | None]
    config: dict[str, Any]
    bounds: dict[str, tuple[float, float | None]] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    timestamp: str = ""

    @property
    def digest(self) -> str:
        return config_digest(self.metric, self.config)

    def check(self) -> None:
        for name, v in self.values.items():
            if v is None:
                continue
            if not math.isfinite(v):
                raise ReportError(f"{self.metric}.{name} is not finite")
            lo, hi = self.bounds.get(name, (None, None))
            if (lo is not None and v < lo) or (hi is not None and v > hi):
                raise ReportError(f"{self.metric}.{name}={v} lies outside declared bounds [{lo}, {hi}]")

    def to_json(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "values": self.values,
            "bounds": {k: list(b) for k, b in self.bounds.items()},
            "config": self.config,
            "config_digest": self.digest,
            "details": self.details,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json())


def emit_report(metric: str, values: Mapping[str, float | None], config: Mapping[str, Any],
                details: Mapping[str, Any] | None = None, seed: int | None = None,
                bounds: Mapping[str, tuple[float, float | None]] | None = None,
                timestamp: str | None = None) -> MetricReport:
    """Build and validate a report; values are checked for finiteness and declared bounds."""
    if bounds is None:
        bounds = BOUNDS.get(metric, {})
    clean = {}
    for k, v in values.items():
        if v is not None:
            v = float(v)
            if not math.isfinite(v):
                raise ReportError(f"{metric}.{k} is not finite")
        clean[k] = v
    report = MetricReport(
        metric=metric,
        values=clean,
        config=_canon(dict(config)),
        bounds=dict(bounds),
        details=_canon(dict(details or {})),
        seed=seed,
        timestamp=timestamp if timestamp is not None else
        datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
    )
    report.check()
    return report


def parse_report(text: str | Mapping[str, Any]) -> MetricReport:
    doc = json.loads(text) if isinstance(text, str) else dict(text)
    try:
        report = MetricReport(
            metric=doc["metric"],
            values=dict(doc["values"]),
            config=dict(doc["config"]),
            bounds={k: (b[0], b[1]) for k, b in doc.get("bounds", {}).items()},
            details=dict(doc.get("details", {})),
            seed=doc.get("seed"),
            version=doc.get("version", __version__),
            timestamp=doc.get("timestamp", ""),
        )
    except (KeyError, TypeError) as exc:
        raise ReportError(f"malformed report: {exc}") from exc
    if "config_digest" in doc and doc["config_digest"] != report.digest:
        raise ReportError("config digest does not match config")
    return report


# --- bundled fixtures ------------------------------------------------------------------
# (evaluator 1, evaluator 2) per dimension, rubric order C1..R4.

FIXTURE_SCORES: dict[str, tuple[tuple[float, float], ...]] = {
    "eps_id": ((3, 4), (4, 4), (2, 2), (4, 3.5), (3, 2), (4, 3), (3, 3), (4, 3.5),
               (4, 4), (4, 3.5), (4, 3.5), (4, 3), (3, 4), (3, 4), (4, 4), (3, 4)),
    "idr": ((3, 4), (4, 4), (2, 3), (3, 2.5), (3, 2), (4, 3), (2, 2), (1, 1),
            (2, 2), (4, 3), (4, 3), (3, 2), (3, 2), (3, 2.5), (3, 3), (3, 2.5)),
    "dcr": ((1, 1), (2, 2), (2, 1.5), (2.5, 3), (3, 2.5), (4, 3.5), (4, 3.5), (3, 2),
            (4, 4), (3, 4), (2, 3), (1.5, 1), (2, 2), (1, 1.5), (4, 3.5), (1, 1.5)),
    "attr_disclosure": ((3, 2.5), (4, 4), (2, 3), (3, 3), (3, 3), (4, 4), (3, 2), (3, 2.5),
                        (2, 3), (2, 2), (2, 2), (1, 2), (2, 2), (3, 3.5), (3, 2.5), (2, 3)),
    "t_mia": ((3, 4), (4, 4), (2, 2), (3, 3), (3, 3), (4, 3), (4, 3.5), (4, 3.5),
              (3, 4), (2, 3), (4, 3), (1, 1.5), (2, 2.5), (3, 3), (4, 3.5), (1, 1.5)),
    "domias": ((3, 3), (4, 4), (2, 2), (4, 4), (3, 2), (4, 3.5), (2.5, 2), (3.5, 3.5),
               (2.5, 3), (2.5, 2.5), (4, 3), (4, 3.5), (4, 4), (3, 2.5), (3, 3.5), (3, 3)),
}

FIXTURE_CAPTIONS = {
    "eps_id": "epsilon-Identifiability",
    "idr": "IDR",
    "dcr": "DCR",
    "attr_disclosure": "Attr. Dis.",
    "t_mia": "T. MIA",
    "domias": "DOMIAS",
}

# aggregates as printed alongside the score tables
PUBLISHED_CAIR: dict[str, tuple[float, float]] = {
    "eps_id": (3.44, 0.08),
    "idr": (2.77, 0.09),
    "dcr": (2.48, 0.07),
    "attr_disclosure": (2.69, 0.08),
    "t_mia": (2.97, 0.08),
    "domias": (3.16, 0.06),
}


def fixture_sheet(metric: str, evaluator: int) -> dict[str, Any]:
    pairs = FIXTURE_SCORES[metric]
    return {"metric": metric, "evaluator": f"E{evaluator}",
            "scores": {d: p[evaluator - 1] for d, p in zip(DIMENSION_IDS, pairs)}}


def load_fixtures() -> dict[str, tuple[ScoreSheet, ScoreSheet]]:
    """The six two-evaluator score-sheet pairs, validated."""
    return {m: (validate_sheet(fixture_sheet(m, 1)), validate_sheet(fixture_sheet(m, 2)))
            for m in FIXTURE_SCORES}


def export_fixtures(directory: str | Path) -> list[Path]:
    """Write ``<metric>_e1.json`` / ``<metric>_e2.json`` for every fixture."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, sheets in load_fixtures().items():
        for i, sheet in enumerate(sheets, start=1):
            p = out / f"{metric}_e{i}.json"
            p.write_text(json.dumps(sheet.to_json(), indent=2) + "\n", encoding="utf-8")
            written.append(p)
    return written
