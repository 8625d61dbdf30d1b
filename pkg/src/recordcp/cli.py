"""Command-line interface.

    recordcp test FILE [--input-format csv|ecad|matrix] [--pipeline ...] [--kind ...]
    recordcp simulate size|power|estimate [--config FILE] [...]
    recordcp kolmogorov --x 1.36 | --p 0.95
    recordcp ingest-check FILE

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kolmogorov
from .api import TestRequest, run_test
from .errors import ConfigurationError, DataError, RecordTestError
from .montecarlo import MonteCarloConfig
from .multiseries import SelectionMethod, apply_selection, select_subseries
from .records import WeightRule, WeightScheme
from .simlab import ALL_STATISTICS, Scenario, run_estimation, run_power, run_size, scenario_grid
from .stationio import Pipeline, aggregate, ingest, read_matrix_csv

log = logging.getLogger("recordcp")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str, cast=str) -> list:
    return [cast(v) for v in text.split(",") if v.strip()]


def parse_weights(text: str) -> WeightScheme:
    if text.startswith("custom:"):
        path = text.split(":", 1)[1]
        try:
            w = np.array(Path(path).read_text().replace(",", " ").split(), dtype=float)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read custom weights: {exc}") from None
        return WeightScheme(WeightRule.CUSTOM, w)
    return WeightScheme.parse(text)


def parse_subseries(text: str) -> tuple[SelectionMethod, dict]:
    method, _, arg = text.partition(":")
    try:
        if method == "user":
            return SelectionMethod.USER_PROVIDED, {"indices": _csv_list(arg, int)}
        if method == "spacing":
            return SelectionMethod.FIXED_SPACING, {"step": int(arg)}
        if method == "greedy":
            return SelectionMethod.GREEDY_CORRELATION, {"threshold": float(arg) if arg else 0.05}
    except ValueError:
        pass
    raise UsageError(f"bad --subseries value {text!r}; use user:<list>, spacing:<k> or greedy:<threshold>")


def _load_matrix(args):
    if args.input_format == "matrix":
        return read_matrix_csv(Path(args.file))
    records = ingest(args.file, args.input_format, suspect=args.suspect)
    return aggregate(records, args.pipeline, policy=args.completeness, max_missing=args.max_missing)


def _select(matrix, args):
    if matrix.M == 1 or args.pipeline is not Pipeline.DAILY:
        return matrix, None
    method, opts = parse_subseries(args.subseries)
    sel = select_subseries(matrix, method, **opts)
    return apply_selection(matrix, sel), sel


def _emit(text: str, output):
    if output:
        Path(output).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def cmd_test(args) -> int:
    args.pipeline = Pipeline.parse(args.pipeline)
    matrix = _load_matrix(args)
    matrix, selection = _select(matrix, args)
    request = TestRequest(
        kind=args.kind,
        scheme=parse_weights(args.weights),
        pipeline=args.pipeline,
        pvalue_mode=args.pvalue,
        mc=MonteCarloConfig(args.replicates, args.seed, args.chunks),
        method=args.method,
        ties=args.ties,
        missing=args.missing,
        fisher=args.fisher,
    )
    result = run_test(matrix, request)
    if selection is not None:
        result.config["subseries"] = {"method": selection.method.value, "selected": selection.selected,
                                      "threshold": selection.threshold}
    if args.plot_data:
        Path(args.plot_data).write_text(_rows_csv(result.plot_rows()))
    if args.format == "json":
        text = result.to_json()
    elif args.format == "csv":
        text = _rows_csv(result.plot_rows())
    else:
        d = result.to_dict(with_process=False)
        keys = ["statistic_label", "statistic", "pvalue", "pvalue_method", "changepoint_index",
                "changepoint", "T", "M", "threshold95"]
        if d["fisher_statistic"] is not None:
            keys.insert(2, "fisher_statistic")
        width = max(map(len, keys))
        text = "\n".join(f"{k.ljust(width)}  {d[k]}" for k in keys)
    _emit(text, args.output)
    return EXIT_OK


def _sim_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key in ("statistics", "T", "M", "alphas", "alpha", "trials", "seed", "replicates", "chunks",
                "scenario", "t0", "theta", "tau"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _scenarios(cfg: dict) -> list[Scenario]:
    if "scenarios" in cfg:
        return [Scenario(**s) for s in cfg["scenarios"]]
    Ms = cfg.get("M", [1])
    return scenario_grid(
        cfg.get("scenario", "A"), cfg.get("T", 100),
        Ms if isinstance(Ms, list) else [Ms],
        cfg.get("t0", [50]), cfg.get("theta", [0.05]), cfg.get("tau", 0.95),
    )


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    stats = cfg.get("statistics", ["N", "d", "s"])
    unknown = [s for s in stats if s not in ALL_STATISTICS]
    if unknown:
        raise UsageError(f"unknown statistics {unknown}")
    common = dict(trials=cfg.get("trials", 10_000), seed=cfg.get("seed", 0),
                  mc_replicates=cfg.get("replicates", 1000), chunks=cfg.get("chunks", 1))
    if args.study == "size":
        M = cfg.get("M", 1)
        report = run_size(stats, cfg.get("T", 50), M[0] if isinstance(M, list) else M,
                          cfg.get("alphas", [0.01, 0.05, 0.10]), **common)
    elif args.study == "power":
        report = run_power(stats, _scenarios(cfg), cfg.get("alpha", 0.05), **common)
    else:
        report = run_estimation(stats, _scenarios(cfg), alpha=cfg.get("alpha", 0.05), **common)
    text = {"json": report.to_json, "csv": report.to_csv, "table": report.to_table}[args.format]()
    _emit(text, args.output)
    return EXIT_OK


def cmd_kolmogorov(args) -> int:
    if not args.x and not args.p:
        raise UsageError("give --x and/or --p values")
    rows = []
    for x in args.x or []:
        ev = kolmogorov.evaluate(x)
        rows.append({"x": x, "survival": ev.survival, "cdf": 1.0 - ev.survival,
                     "series": ev.series_id.value, "terms": ev.terms_used})
    for p in args.p or []:
        rows.append({"p": p, "quantile": kolmogorov.quantile(p)})
    if args.format == "json":
        text = json.dumps(rows, indent=2)
    else:
        text = "\n".join(" ".join(f"{k}={v}" for k, v in r.items()) for r in rows)
    _emit(text, None)
    return EXIT_OK


def cmd_ingest_check(args) -> int:
    records = ingest(args.file, args.input_format, suspect=args.suspect)
    n_missing = sum(r.missing for r in records)
    n_suspect = sum(r.quality == 1 for r in records)
    years = sorted({r.date.year for r in records})
    summary = {
        "records": len(records), "missing": n_missing, "suspect": n_suspect,
        "first_date": records[0].date.isoformat(), "last_date": records[-1].date.isoformat(),
        "years": len(years),
    }
    if args.pipeline:
        m = aggregate(records, args.pipeline, policy=args.completeness, max_missing=args.max_missing)
        summary.update({"pipeline": Pipeline.parse(args.pipeline).value, "T": m.T, "M": m.M,
                        "missing_cells": int(m.missing.sum()),
                        "complete_columns": int((~m.missing.any(axis=0)).sum())})
    if args.format == "json":
        text = json.dumps(summary, indent=2)
    else:
        width = max(map(len, summary))
        text = "\n".join(f"{k.ljust(width)}  {v}" for k, v in summary.items())
    _emit(text, None)
    return EXIT_OK


def _add_input_options(p):
    p.add_argument("file")
    p.add_argument("--input-format", choices=["csv", "ecad", "matrix"], default="csv")
    p.add_argument("--suspect", choices=["keep", "missing"], default="keep",
                   help="handling of quality-1 (suspect) values")
    p.add_argument("--completeness", choices=["available", "strict"], default="available")
    p.add_argument("--max-missing", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recordcp", description="Changepoint tests based on record-breaking events.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run a record or Pettitt test on a data file")
    _add_input_options(t)
    t.add_argument("--pipeline", default="raw", choices=[p.value for p in Pipeline])
    t.add_argument("--method", choices=["records", "pettitt"], default="records")
    t.add_argument("--kind", default="upper", choices=["upper", "lower", "diff", "sum"])
    t.add_argument("--weights", default="none", help="none|invsd|linear|custom:<file>")
    t.add_argument("--pvalue", choices=["asymptotic", "mc"], default=None)
    t.add_argument("--replicates", type=int, default=10_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--chunks", type=int, default=1)
    t.add_argument("--subseries", default="greedy:0.05", help="user:<list> | spacing:<k> | greedy:<threshold>")
    t.add_argument("--ties", choices=["error", "not-a-record"], default="error")
    t.add_argument("--missing", choices=["error", "compress"], default="error")
    t.add_argument("--fisher", action="store_true", help="experimental Fisher-type transform")
    t.add_argument("--format", choices=["json", "table", "csv"], default="table")
    t.add_argument("--plot-data", help="also write tidy plot data CSV here")
    t.add_argument("--output", "-o")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="size / power / changepoint-estimate studies")
    s.add_argument("study", choices=["size", "power", "estimate"])
    s.add_argument("--config", help="JSON file with the study configuration")
    s.add_argument("--statistics", type=lambda v: _csv_list(v))
    s.add_argument("--T", type=int)
    s.add_argument("--M", type=lambda v: _csv_list(v, int))
    s.add_argument("--alphas", type=lambda v: _csv_list(v, float))
    s.add_argument("--alpha", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--replicates", type=int, help="Monte Carlo replicates for weighted statistics")
    s.add_argument("--chunks", type=int)
    s.add_argument("--scenario", choices=list("ABCD"))
    s.add_argument("--t0", type=lambda v: _csv_list(v, int))
    s.add_argument("--theta", type=lambda v: _csv_list(v, float))
    s.add_argument("--tau", type=float)
    s.add_argument("--format", choices=["json", "table", "csv"], default="table")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("kolmogorov", help="Kolmogorov survival function and quantiles")
    k.add_argument("--x", type=float, nargs="+")
    k.add_argument("--p", type=float, nargs="+")
    k.add_argument("--format", choices=["json", "table"], default="table")
    k.set_defaults(func=cmd_kolmogorov)

    c = sub.add_parser("ingest-check", help="parse a data file and summarise it")
    _add_input_options(c)
    c.add_argument("--pipeline", choices=[p.value for p in Pipeline])
    c.add_argument("--format", choices=["json", "table"], default="table")
    c.set_defaults(func=cmd_ingest_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"recordcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"recordcp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RecordTestError as exc:
        print(f"recordcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
