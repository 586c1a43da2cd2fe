"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.

Randomness: every random draw derives from ``--seed`` through
``numpy.random.SeedSequence([seed, counter])`` with a fixed counter per use
(see ``SUBSEEDS``), so one seed reproduces a whole run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .attacks import (
    DEFAULT_K,
    AttrDisclosureConfig,
    BandwidthRule,
    MiaConfig,
    ThresholdRule,
    attribute_disclosure,
    domias,
    threshold_mia,
)
from .bench import run_bench
from .cair import SheetError, assessment_from_json, cair_aggregate, granularity_views, radar_svg, validate_sheet
from .dataset import ColumnKind, DataError, Schema, Table, load_csv, load_schema, split_membership
from .disclosure import IdrConfig, idr
from .distance import WeightVector, inverse_entropy_weights, spec_from_json
from .report import ReportError, canonical_json, emit_report, export_fixtures
from .similarity import Aggregate, Orientation, dcr, epsilon_identifiability

log = logging.getLogger("synthpriv")

METRICS = ("dcr", "eps_id", "t_mia", "attr_disclosure", "domias", "idr")
DEFAULT_METRICS = ("dcr", "eps_id", "idr")
SUBSEEDS = {"membership_split": 0}
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
RUN_USAGE = ("usage: synthpriv privacy run --real PATH --synthetic PATH [--reference PATH] "
             "[--population PATH] [--schema PATH] [--config PATH] [--metrics LIST] [--seed N] "
             "[--threads N] [--out DIR] [--format {json,csv}]")


class UsageError(Exception):
    """Invalid flags or configuration; maps to exit code 2."""


def subseed(seed: int, purpose: str) -> int:
    return int(np.random.SeedSequence([seed, SUBSEEDS[purpose]]).generate_state(1)[0])


def _setup_logging() -> None:
    level = os.environ.get("SYNTHPRIV_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


# --- privacy run ---------------------------------------------------------------------


@dataclass
class RunConfig:
    real: str
    synthetic: str
    reference: str | None = None
    population: str | None = None
    schema: str | None = None
    candidates: str | None = None
    labels: str | None = None
    metrics: list[str] = field(default_factory=lambda: list(DEFAULT_METRICS))
    seed: int = 0
    out: str | None = None
    format: str = "json"
    params: dict[str, dict[str, Any]] = field(default_factory=dict)

    def param(self, metric: str, key: str, default: Any = None) -> Any:
        return self.params.get(metric, {}).get(key, default)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    doc: dict[str, Any] = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
    flags = {k: getattr(args, k) for k in ("real", "synthetic", "reference", "population", "schema",
                                           "seed", "out", "format")}
    merged = {k: doc.get(k) for k in flags}
    merged.update({k: v for k, v in flags.items() if v is not None})
    metrics = args.metrics if args.metrics is not None else doc.get("metrics", list(DEFAULT_METRICS))
    if isinstance(metrics, str):
        metrics = [m.strip() for m in metrics.split(",") if m.strip()]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise UsageError(f"unknown metrics {unknown}; choose from {','.join(METRICS)}")
    if not metrics:
        raise UsageError("no metrics requested")
    for key in ("real", "synthetic"):
        if not merged.get(key):
            raise UsageError(f"--{key} is required\n{RUN_USAGE}")
    fmt = merged.get("format") or "json"
    if fmt not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    params = {m: dict(doc.get(m, {})) for m in METRICS if isinstance(doc.get(m, {}), dict)}
    return RunConfig(
        real=merged["real"], synthetic=merged["synthetic"], reference=merged.get("reference"),
        population=merged.get("population"), schema=merged.get("schema"),
        candidates=doc.get("candidates"), labels=doc.get("labels"),
        metrics=list(dict.fromkeys(metrics)), seed=int(merged.get("seed") or 0),
        out=merged.get("out"), format=fmt, params=params)


def _load(path: str, schema: Schema | None, what: str) -> Table:
    if not Path(path).is_file():
        raise UsageError(f"{what} file not found: {path}")
    try:
        return load_csv(path, schema)
    except DataError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def load_labels(path: str, n: int) -> np.ndarray:
    if not Path(path).is_file():
        raise UsageError(f"labels file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["member"]:
        raise UsageError("labels CSV must have the single header 'member'")
    values = [r[0] for r in rows[1:]]
    if any(v not in ("0", "1") for v in values):
        raise UsageError("labels must be 0 or 1")
    if len(values) != n:
        raise UsageError(f"{len(values)} labels for {n} candidates")
    return np.array([v == "1" for v in values])


@dataclass
class Inputs:
    real: Table
    synth: Table
    reference: Table | None
    population: Table | None
    candidates: Table | None = None
    labels: np.ndarray | None = None
    density_reference: Table | None = None


def load_inputs(cfg: RunConfig) -> Inputs:
    schema = None
    if cfg.schema:
        if not Path(cfg.schema).is_file():
            raise UsageError(f"schema file not found: {cfg.schema}")
        try:
            schema = load_schema(cfg.schema)
        except (DataError, json.JSONDecodeError) as exc:
            raise UsageError(f"schema: {exc}") from exc
    real = _load(cfg.real, schema, "real")
    schema = real.schema
    synth = _load(cfg.synthetic, schema, "synthetic")
    reference = _load(cfg.reference, schema, "reference") if cfg.reference else None
    population = _load(cfg.population, schema, "population") if cfg.population else None
    inputs = Inputs(real, synth, reference, population)
    for name, t in (("real", real), ("synthetic", synth), ("reference", reference), ("population", population)):
        if t is not None and t.n_rows == 0:
            raise UsageError(f"{name} table has no rows")
    return inputs


def _prepare_candidates(cfg: RunConfig, inp: Inputs) -> None:
    """Candidates default to real rows (members) plus half of the reference rows (non-members)."""
    needs = {"t_mia", "domias"} & set(cfg.metrics)
    if not needs:
        return
    if cfg.candidates:
        inp.candidates = _load(cfg.candidates, inp.real.schema, "candidates")
        if not cfg.labels:
            raise UsageError("a candidates file needs a labels file")
        inp.labels = load_labels(cfg.labels, inp.candidates.n_rows)
        inp.density_reference = inp.reference
        return
    if inp.reference is None:
        if "domias" in needs:
            raise UsageError("domias needs --reference (or candidates/labels in the config)")
        inp.candidates, inp.labels = inp.real, np.ones(inp.real.n_rows, dtype=bool)
        return
    if inp.reference.n_rows < 2:
        raise UsageError("reference table needs at least 2 rows to split off non-member candidates")
    density_ref, holdout = split_membership(inp.reference, 0.5, subseed(cfg.seed, "membership_split"))
    inp.density_reference = density_ref
    inp.candidates = inp.real.concat(holdout)
    inp.labels = np.concatenate([np.ones(inp.real.n_rows, bool), np.zeros(holdout.n_rows, bool)])


def _sensitive(cfg: RunConfig, schema: Schema) -> str:
    name = cfg.param("attr_disclosure", "sensitive")
    if name is None:
        flagged = [c for c in schema.sensitive_columns if schema.column(c).kind is ColumnKind.CATEGORICAL]
        if not flagged:
            raise UsageError("attr_disclosure needs a categorical sensitive column (config or schema flag)")
        name = flagged[0]
    if name not in schema.names:
        raise UsageError(f"unknown sensitive column {name!r}")
    return name


def validate_params(cfg: RunConfig, inp: Inputs) -> None:
    """Check every metric's preconditions before any computation starts."""
    schema = inp.real.schema
    complete = ["real", "synthetic"]
    for name in complete:
        t = inp.real if name == "real" else inp.synth
        if {"dcr", "eps_id", "t_mia", "domias"} & set(cfg.metrics) and t.missing_mask().any():
            raise UsageError(f"{name} table contains missing values")
    if "dcr" in cfg.metrics:
        agg = cfg.param("dcr", "aggregate", "mean")
        if agg not in ("mean", "median"):
            raise UsageError("dcr.aggregate must be mean or median")
    if "eps_id" in cfg.metrics:
        if inp.real.n_rows < 2:
            raise UsageError("eps_id needs at least 2 real rows")
        orient = cfg.param("eps_id", "orientation", Orientation.PER_TRUE_RECORD.value)
        if orient not in [o.value for o in Orientation]:
            raise UsageError(f"eps_id.orientation must be one of {[o.value for o in Orientation]}")
    if "t_mia" in cfg.metrics:
        tau = cfg.param("t_mia", "tau", 0.0)
        if tau == ThresholdRule.MEDIAN_SYNTH_NN.value:
            if inp.synth.n_rows < 2:
                raise UsageError("median_synth_nn threshold needs at least 2 synthetic rows")
        elif not isinstance(tau, (int, float)) or tau < 0:
            raise UsageError("t_mia.tau must be a non-negative number or 'median_synth_nn'")
    if "attr_disclosure" in cfg.metrics:
        sens = _sensitive(cfg, schema)
        if schema.column(sens).kind is not ColumnKind.CATEGORICAL:
            raise UsageError("attr_disclosure sensitive column must be categorical")
        k = cfg.param("attr_disclosure", "k", DEFAULT_K)
        if not isinstance(k, int) or not 1 <= k <= inp.synth.n_rows:
            raise UsageError(f"attr_disclosure.k must be an integer in [1, {inp.synth.n_rows}]")
        for level in cfg.param("attr_disclosure", "levels", None) or []:
            if sens in level or not level or set(level) - set(schema.names):
                raise UsageError(f"invalid knowledge level {level}")
    if "domias" in cfg.metrics:
        bw = cfg.param("domias", "bandwidth", "silverman")
        if bw != "silverman" and not (isinstance(bw, (int, float)) and bw > 0):
            raise UsageError("domias.bandwidth must be 'silverman' or a positive number")
    if "idr" in cfg.metrics:
        quasi = cfg.param("idr", "quasi", schema.quasi_identifiers)
        sensitive = cfg.param("idr", "sensitive", schema.sensitive_columns)
        if not quasi or not sensitive:
            raise UsageError("idr needs quasi-identifier and sensitive columns (config or schema flags)")
        for c in list(quasi) + list(sensitive):
            if c not in schema.names:
                raise UsageError(f"idr: unknown column {c!r}")
        lam = cfg.param("idr", "lambda", 1.0)
        if not isinstance(lam, (int, float)) or not 0.0 <= lam <= 1.0:
            raise UsageError("idr.lambda must lie in [0, 1]")
        f = cfg.param("idr", "sampling_fraction", 1.0)
        if not isinstance(f, (int, float)) or not 0.0 < f <= 1.0:
            raise UsageError("idr.sampling_fraction must lie in (0, 1]")


def _distance(cfg: RunConfig, metric: str, reference: Table):
    try:
        return spec_from_json(cfg.param(metric, "distance"), reference)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{metric}.distance: {exc}") from exc


def _inputs_json(cfg: RunConfig, inp: Inputs) -> dict[str, Any]:
    out = {"real": {"path": cfg.real, "rows": inp.real.n_rows},
           "synthetic": {"path": cfg.synthetic, "rows": inp.synth.n_rows},
           "schema": inp.real.schema.to_json()}
    if inp.reference is not None:
        out["reference"] = {"path": cfg.reference, "rows": inp.reference.n_rows}
    if inp.population is not None:
        out["population"] = {"path": cfg.population, "rows": inp.population.n_rows}
    return out


def run_metric(metric: str, cfg: RunConfig, inp: Inputs, threads: int):
    base = {"inputs": _inputs_json(cfg, inp), "seed": cfg.seed, "version": __version__}
    if metric == "dcr":
        spec = _distance(cfg, "dcr", inp.real)
        agg = Aggregate(cfg.param("dcr", "aggregate", "mean"))
        r = dcr(inp.real, inp.synth, spec, agg, threads=threads)
        config = {**base, "aggregate": agg.value, "distance": spec.to_json()}
        return emit_report("dcr", {"value": r.value}, config, r.details(), cfg.seed)
    if metric == "eps_id":
        w = cfg.param("eps_id", "weights", "inverse_entropy")
        bins = int(cfg.param("eps_id", "entropy_bins", 10))
        weights = inverse_entropy_weights(inp.real, bins) if w == "inverse_entropy" else WeightVector(tuple(w))
        orient = Orientation(cfg.param("eps_id", "orientation", Orientation.PER_TRUE_RECORD.value))
        r = epsilon_identifiability(inp.real, inp.synth, weights, orient, threads=threads)
        config = {**base, "orientation": orient.value, "entropy_bins": bins, "distance": r.spec.to_json(),
                  "inequality": "strict"}
        return emit_report("eps_id", {"value": r.value}, config,
                           {"violations": r.violations, "total": r.total}, cfg.seed)
    if metric == "t_mia":
        spec = _distance(cfg, "t_mia", inp.synth)
        tau = cfg.param("t_mia", "tau", 0.0)
        mia_cfg = (MiaConfig(rule=ThresholdRule.MEDIAN_SYNTH_NN, spec=spec)
                   if tau == ThresholdRule.MEDIAN_SYNTH_NN.value else MiaConfig(float(tau), spec=spec))
        r = threshold_mia(inp.synth, inp.candidates, inp.labels, mia_cfg, threads=threads)
        config = {**base, "tau": tau, "distance": spec.to_json(), "candidates": _candidates_json(cfg, inp)}
        return emit_report("t_mia", {"precision": r.precision, "recall": r.recall}, config,
                           {**r.confusion(), "tau_resolved": r.details["tau"]}, cfg.seed)
    if metric == "attr_disclosure":
        sens = _sensitive(cfg, inp.real.schema)
        levels = cfg.param("attr_disclosure", "levels")
        k = cfg.param("attr_disclosure", "k", DEFAULT_K)
        dist_doc = cfg.param("attr_disclosure", "distance")
        spec = None
        if dist_doc is not None:
            spec = spec_from_json(dist_doc, inp.real)
        ad_cfg = AttrDisclosureConfig(k, tuple(tuple(lv) for lv in levels) if levels else None, spec)
        r = attribute_disclosure(inp.synth, inp.real, sens, ad_cfg, threads=threads)
        config = {**base, "sensitive": sens, "k": k, "levels": [list(lv) for lv in r.levels],
                  "averaging": "macro", "distance": dist_doc or {"kind": "gower"}}
        details = {"per_level": [{"level": list(lv), "precision": rep.precision, "recall": rep.recall,
                                  "accuracy": rep.accuracy} for lv, rep in zip(r.levels, r.reports)]}
        return emit_report("attr_disclosure", {"precision": r.mean_precision, "recall": r.mean_recall},
                           config, details, cfg.seed)
    if metric == "domias":
        bw = cfg.param("domias", "bandwidth", "silverman")
        rule = BandwidthRule() if bw == "silverman" else BandwidthRule(float(bw))
        r = domias(inp.synth, inp.density_reference, inp.candidates, inp.labels, rule)
        config = {**base, "bandwidth": rule.to_json(), "backend": "gaussian_kde",
                  "accuracy_threshold": "median_score", "candidates": _candidates_json(cfg, inp)}
        return emit_report("domias", {"auroc": r.auroc, "accuracy": r.accuracy, "precision": r.precision,
                                      "recall": r.recall}, config, {**r.confusion(), **r.details}, cfg.seed)
    if metric == "idr":
        schema = inp.real.schema
        quasi = tuple(cfg.param("idr", "quasi", schema.quasi_identifiers))
        sensitive = tuple(cfg.param("idr", "sensitive", schema.sensitive_columns))
        icfg = IdrConfig(quasi, sensitive, float(cfg.param("idr", "lambda", 1.0)), inp.population,
                         None if inp.population is not None else float(cfg.param("idr", "sampling_fraction", 1.0)))
        r = idr(inp.real, inp.synth, icfg)
        config = {**base, **icfg.to_json(), "r_rule": "sensitive_agreement"}
        return emit_report("idr", {"value": r.value}, config, {"matched": r.matched, "learned": r.learned},
                           cfg.seed)
    raise UsageError(f"unknown metric {metric}")


def _candidates_json(cfg: RunConfig, inp: Inputs) -> dict[str, Any]:
    if cfg.candidates:
        return {"source": "file", "path": cfg.candidates, "labels": cfg.labels}
    if inp.reference is None:
        return {"source": "real_only", "members": int(inp.labels.sum())}
    return {"source": "real_plus_reference_split", "member_fraction_of_reference": 0.5,
            "split_seed": subseed(cfg.seed, "membership_split"),
            "members": int(inp.labels.sum()), "non_members": int((~inp.labels).sum())}


def write_outputs(cfg: RunConfig, reports: list) -> None:
    summary = {"version": __version__, "seed": cfg.seed, "metrics": [r.to_json() for r in reports]}
    if cfg.out is None:
        sys.stdout.write(canonical_json(summary) + "\n")
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in reports:
        (out / f"{r.metric}.json").write_text(r.dumps() + "\n", encoding="utf-8")
    if cfg.format == "json":
        (out / "summary.json").write_text(canonical_json(summary) + "\n", encoding="utf-8")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "name", "value", "config_digest"])
        for r in reports:
            for name, v in r.values.items():
                w.writerow([r.metric, name, "" if v is None else f"{v:.12g}", r.digest])
        (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")


def cmd_privacy_run(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    inp = load_inputs(cfg)
    _prepare_candidates(cfg, inp)
    validate_params(cfg, inp)
    threads = max(1, int(args.threads or 1))
    log.info("running %s with %d thread(s)", ",".join(cfg.metrics), threads)
    reports = [run_metric(m, cfg, inp, threads) for m in cfg.metrics]
    write_outputs(cfg, reports)
    return EXIT_OK


# --- cair ----------------------------------------------------------------------------


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def cmd_cair_aggregate(args: argparse.Namespace) -> int:
    try:
        sheets = [validate_sheet(_read_json(p)) for p in args.sheets]
        views = granularity_views(cair_aggregate(sheets))
    except SheetError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(views, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_cair_radar(args: argparse.Namespace) -> int:
    try:
        assessment = assessment_from_json(_read_json(args.assessment))
    except SheetError as exc:
        raise UsageError(str(exc)) from exc
    svg = radar_svg(assessment)
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def cmd_cair_fixtures(args: argparse.Namespace) -> int:
    for p in export_fixtures(args.directory):
        print(p)
    return EXIT_OK


# --- bench ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text}") from exc


def cmd_bench(args: argparse.Namespace) -> int:
    if len(args.sizes) < 2:
        raise UsageError("--sizes needs at least two entries to fit a slope")
    if min(args.sizes) < 2:
        raise UsageError("every size must be at least 2 rows")
    result = run_bench(args.sizes, args.columns, args.seed, args.repeats, max(1, args.threads))
    lines = ["n,seconds"] + [f"{n},{s:.6f}" for n, s in zip(result.sizes, result.seconds)]
    lines.append(f"# loglog_slope={result.slope:.4f}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        doc = {"sizes": list(result.sizes), "seconds": list(result.seconds), "slope": result.slope,
               "columns": result.columns, "seed": result.seed}
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthpriv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    privacy = sub.add_parser("privacy", help="privacy metrics").add_subparsers(dest="action", required=True)
    run = privacy.add_parser("run", help="compute privacy metrics for a real/synthetic pair")
    run.add_argument("--real")
    run.add_argument("--synthetic")
    run.add_argument("--reference")
    run.add_argument("--population")
    run.add_argument("--schema")
    run.add_argument("--config")
    run.add_argument("--metrics", type=lambda s: [m.strip() for m in s.split(",") if m.strip()])
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--out")
    run.add_argument("--format", choices=("json", "csv"))
    run.set_defaults(func=cmd_privacy_run)

    cair = sub.add_parser("cair", help="CAIR rubric aggregation").add_subparsers(dest="action", required=True)
    agg = cair.add_parser("aggregate", help="aggregate evaluator score sheets")
    agg.add_argument("sheets", nargs="+")
    agg.add_argument("--out")
    agg.set_defaults(func=cmd_cair_aggregate)
    radar = cair.add_parser("radar", help="render an assessment as a radar SVG")
    radar.add_argument("assessment")
    radar.add_argument("--out")
    radar.set_defaults(func=cmd_cair_radar)
    fx = cair.add_parser("fixtures", help="export the bundled published score sheets")
    fx.add_argument("directory")
    fx.set_defaults(func=cmd_cair_fixtures)

    bench = sub.add_parser("bench", help="nearest-neighbour scaling benchmark")
    bench.add_argument("--sizes", type=_int_list, default=[1000, 2000, 4000])
    bench.add_argument("--columns", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"synthpriv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SheetError, ReportError, ValueError, OSError) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"synthpriv: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
