"""Command-line entry point: generate, train, forecast, evaluate.

Flags mirror :class:`probfcast.pipeline.RunConfig`; any flag can instead be
set in a flat ``key=value`` file passed with ``--config`` (flags win).  The
``PROBFCAST_OUT`` environment variable supplies the default output
directory.  Exit codes: 0 success, 1 usage/config error, 2 data error,
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
import traceback
from datetime import timedelta
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import pipeline, qrf, scoring
from .combine import DEFAULT_LEVELS
from .error_model import build_error_table, rank_label_members
from .exceptions import ConfigError, DataError
from .ingest import (
    Dataset,
    ScenarioWindow,
    format_hour,
    load_forecasts,
    load_observations,
    parse_hour,
    slice_scenario,
    write_forecasts,
    write_observations,
)
from .synth import SynthConfig, load_synth_config, parse_flat_config, synthesize_dataset

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1 for usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def _default_out() -> str:
    return os.environ.get("PROBFCAST_OUT", "probfcast_out")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--forecasts", help="forecasts.csv path")
    p.add_argument("--observations", help="observations.csv path")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file supplying flag defaults")
    p.add_argument("--out", help="output directory (default $PROBFCAST_OUT or ./probfcast_out)")
    p.add_argument("--trees", type=int, help="number of trees (default 250)")
    p.add_argument("--mtry", type=int, help="covariates tried per split (default 1)")
    p.add_argument("--min-node-size", type=int, help="smallest splittable node (default 1)")
    p.add_argument("--sample-count", type=int, help="rows subsampled per tree (default 128)")
    p.add_argument(
        "--replace",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="bootstrap with replacement instead of subsampling",
    )
    p.add_argument("--scenarios", type=int, help="number of evaluation scenarios (default 200)")
    p.add_argument("--train-days", type=int, help="training window length (default 14)")
    p.add_argument("--horizon", type=int, help="forecast horizon in hours (default 168)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--threshold", type=float, help="probability threshold in degC (default 0)")
    p.add_argument("--draws", type=int, help="simulated values per hour (default 1000)")
    p.add_argument("--min-training-rows", type=int, help="minimum error rows (default 1000)")
    p.add_argument("--jobs", type=int, help="scenario worker processes (default 1)")
    p.add_argument(
        "--levels", help="comma-separated quantile levels overriding the built-in grid"
    )


_CAST = {
    "forecasts": str,
    "observations": str,
    "out": str,
    "trees": int,
    "mtry": int,
    "min_node_size": int,
    "sample_count": int,
    "replace": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "scenarios": int,
    "train_days": int,
    "horizon": int,
    "seed": int,
    "threshold": float,
    "draws": int,
    "min_training_rows": int,
    "jobs": int,
    "levels": str,
    "origin": str,
    "save": str,
    "dump_errors": str,
    "dump_cdf_hour": int,
    "span_days": int,
}


def _merged(args: argparse.Namespace) -> Dict[str, object]:
    """Resolve each option: explicit flag, then config-file value, then default."""
    file_kv: Dict[str, str] = {}
    if getattr(args, "config", None):
        file_kv = parse_flat_config(args.config)
        unknown = set(file_kv) - set(_CAST)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def get(key: str, default=None):
        v = getattr(args, key, None)
        if v is not None:
            return v
        if key in file_kv:
            try:
                return _CAST[key](file_kv[key])
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
        return default

    merged = {k: get(k) for k in _CAST}
    if merged["out"] is None:
        merged["out"] = _default_out()
    return merged


def _run_config(m: Dict[str, object]) -> pipeline.RunConfig:
    levels = DEFAULT_LEVELS
    if m["levels"]:
        try:
            levels = np.array(sorted({float(p) for p in str(m["levels"]).split(",")}))
        except ValueError as exc:
            raise ConfigError(f"--levels: {exc}") from None
        if levels.size == 0 or levels[0] <= 0 or levels[-1] >= 1:
            raise ConfigError("--levels must lie strictly within (0, 1)")
    try:
        return pipeline.RunConfig(
            num_trees=m["trees"] if m["trees"] is not None else 250,
            mtry=m["mtry"] if m["mtry"] is not None else 1,
            min_node_size=m["min_node_size"] if m["min_node_size"] is not None else 1,
            sample_count=m["sample_count"] if m["sample_count"] is not None else 128,
            replace=bool(m["replace"]) if m["replace"] is not None else False,
            n_scenarios=m["scenarios"] if m["scenarios"] is not None else 200,
            train_days=m["train_days"] if m["train_days"] is not None else 14,
            horizon_hours=m["horizon"] if m["horizon"] is not None else 168,
            seed=m["seed"] if m["seed"] is not None else 0,
            levels=levels,
            threshold=m["threshold"] if m["threshold"] is not None else 0.0,
            draws=m["draws"] if m["draws"] is not None else 1000,
            min_training_rows=(
                m["min_training_rows"] if m["min_training_rows"] is not None else 1000
            ),
            jobs=m["jobs"] if m["jobs"] is not None else 1,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _out_dir(m: Dict[str, object]) -> Path:
    out = Path(str(m["out"]))
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _load_dataset(m: Dict[str, object]) -> Dataset:
    if not m["forecasts"] or not m["observations"]:
        raise ConfigError("--forecasts and --observations are required")
    fpath, opath = Path(str(m["forecasts"])), Path(str(m["observations"]))
    for p in (fpath, opath):
        if not p.exists():
            raise DataError(f"input file {p} does not exist")
    return Dataset(
        forecasts=load_forecasts(fpath),
        observations=load_observations(opath),
        site_id=fpath.stem,
    )


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    seed = 0
    if args.config:
        config, file_seed = load_synth_config(args.config)
        if file_seed is not None:
            seed = file_seed
    else:
        config = SynthConfig()
    if args.span_days is not None:
        config = SynthConfig(
            span_days=args.span_days,
            start=config.start,
            site_id=config.site_id,
            models=config.models,
        )
    if args.seed is not None:
        seed = args.seed
    dataset = synthesize_dataset(config, seed)
    write_forecasts(out / "forecasts.csv", dataset.forecasts)
    write_observations(out / "observations.csv", dataset.observations)
    print(f"wrote {len(dataset.forecasts)} forecasts and {len(dataset.observations)} observations")
    print(f"  forecasts:    {out / 'forecasts.csv'}")
    print(f"  observations: {out / 'observations.csv'}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _write_oob(path: Path, oob: qrf.OOBCoverage) -> None:
    header = ["lead_hours", "n"] + [f"cov{round(w * 100):d}" for w in oob.intervals]
    rows = [
        [int(lead), int(n)] + [_fmt(c) for c in cov_row]
        for lead, n, cov_row in zip(oob.lead_hours, oob.n_rows, oob.coverage)
    ]
    _write_csv(path, header, rows)


def cmd_train(args: argparse.Namespace) -> int:
    m = _merged(args)
    config = _run_config(m)
    out = _out_dir(m)
    dataset = _load_dataset(m)
    if m["origin"]:
        origin = parse_hour(str(m["origin"]))
    else:
        origin = max(o.valid_time for o in dataset.observations) + timedelta(hours=1)
    window = ScenarioWindow(origin, config.train_days, config.horizon_hours)
    train_ds, _ = slice_scenario(dataset, window)
    labelled = rank_label_members(train_ds.forecasts)
    table = build_error_table(Dataset(labelled, train_ds.observations, train_ds.site_id))
    if m["dump_errors"]:
        _write_csv(
            Path(str(m["dump_errors"])),
            ["lead_hours", "model_label", "error_degC"],
            [[int(s.lead_hours), s.model_label, _fmt(s.error)] for s in table.samples()],
        )
    t0 = time.perf_counter()
    forest = qrf.train(table, config.forest_config())
    train_seconds = time.perf_counter() - t0
    save_path = Path(str(m["save"])) if m["save"] else out / "forest.npz"
    save_path = qrf.save_forest(save_path, forest)
    oob = qrf.oob_coverage(forest, table, config.intervals)
    _write_oob(out / "oob_coverage.csv", oob)
    with open(out / "timings.txt", "w") as fh:
        fh.write(f"train_seconds={train_seconds:.3f}\n")
        fh.write(f"train_rows={table.n_rows}\n")
        fh.write(f"skipped_rows={table.skipped}\n")
    print(f"trained {config.num_trees} trees on {table.n_rows} rows in {train_seconds:.2f}s")
    print(f"  forest:       {save_path}")
    print(f"  oob coverage: {out / 'oob_coverage.csv'}")
    return 0


# ---------------------------------------------------------------------------
# forecast
# ---------------------------------------------------------------------------


def cmd_forecast(args: argparse.Namespace) -> int:
    m = _merged(args)
    config = _run_config(m)
    out = _out_dir(m)
    dataset = _load_dataset(m)
    if not m["origin"]:
        raise ConfigError("--origin is required for forecast")
    origin = parse_hour(str(m["origin"]))
    result = pipeline.run_scenario(
        dataset, origin, config, with_products=True, score=False
    )
    q_rows, int_rows, sample_rows, prob_rows = [], [], [], []
    for hp in result.products:
        ts = format_hour(hp.valid_time)
        d = hp.distribution
        for level, value in zip(hp.combined.quantiles.levels, hp.combined.quantiles.values):
            q_rows.append([ts, _fmt(level), _fmt(value)])
        int_rows.append(
            [
                ts,
                _fmt(d.quantile(0.5)),
                _fmt(d.quantile(0.1)),
                _fmt(d.quantile(0.9)),
                _fmt(d.quantile(0.025)),
                _fmt(d.quantile(0.975)),
            ]
        )
        for j, v in enumerate(hp.samples):
            sample_rows.append([ts, j, _fmt(v)])
        prob_rows.append([ts, _fmt(hp.prob_below), _fmt(hp.prob_below_sampled)])
    _write_csv(out / "quantiles.csv", ["valid_time", "level", "value_degC"], q_rows)
    _write_csv(
        out / "intervals.csv",
        ["valid_time", "median", "lo80", "hi80", "lo95", "hi95"],
        int_rows,
    )
    _write_csv(out / "samples.csv", ["valid_time", "draw", "value_degC"], sample_rows)
    _write_csv(
        out / "prob_below.csv",
        ["valid_time", "prob_below", "prob_below_sampled"],
        prob_rows,
    )
    if m["dump_cdf_hour"] is not None:
        h = int(m["dump_cdf_hour"])
        match = [hp for hp in result.products if hp.lead_hours == h]
        if not match:
            raise DataError(f"no forecast product at lead hour {h}")
        d = match[0].distribution
        lo = float(d.quantile(0.001))
        hi = float(d.quantile(0.999))
        xs = np.linspace(lo, hi, 500)
        _write_csv(
            out / "cdf_probe.csv",
            ["value_degC", "cdf"],
            [[_fmt(x), _fmt(p)] for x, p in zip(xs, d.cdf(xs))],
        )
    print(f"forecast products for origin {format_hour(origin)} written to {out}")
    print(f"  covered hours: {len(result.products)} of {config.horizon_hours}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


_SCORE_HEADER = [
    "valid_time",
    "lead_hours",
    "crps",
    "log_score",
    "abs_err_median",
    "hit50",
    "hit80",
    "hit90",
    "hit95",
]
_RAW_HEADER = ["valid_time", "lead_hours", "crps", "log_score", "abs_err_median"]


def _finite_mean(records: List[scoring.ScoreRecord], metric: str) -> float:
    vals = np.array([getattr(r, metric) for r in records], dtype=float)
    finite = vals[np.isfinite(vals)]
    return float(np.mean(finite)) if finite.size else float("nan")


def _score_rows(records: List[scoring.ScoreRecord], intervals) -> List[List]:
    rows = []
    for r in records:
        rows.append(
            [
                format_hour(r.valid_time),
                r.lead_hours,
                _fmt(r.crps),
                _fmt(r.log_score),
                _fmt(r.abs_error_median),
            ]
            + [int(r.interval_hits[w]) for w in intervals]
        )
    return rows


def _aggregate_rows(aggs: List[scoring.LeadAggregate], prefix: str = "") -> List[List]:
    rows = []
    for agg in aggs:
        for metric in sorted(agg.means):
            rows.append(
                [
                    agg.lead_hours,
                    prefix + metric,
                    _fmt(agg.means[metric]),
                    _fmt(agg.sds[metric]),
                    agg.counts[metric],
                ]
            )
    return rows


def cmd_evaluate(args: argparse.Namespace) -> int:
    m = _merged(args)
    config = _run_config(m)
    out = _out_dir(m)
    dataset = _load_dataset(m)
    t0 = time.perf_counter()
    results = pipeline.run_scenarios(dataset, config)
    wall = time.perf_counter() - t0

    scen_dir = out / "scenarios"
    scen_dir.mkdir(exist_ok=True)
    all_records: List[scoring.ScoreRecord] = []
    all_raw: List[scoring.ScoreRecord] = []
    for r in results:
        _write_csv(
            scen_dir / f"scenario_{r.index:03d}_scores.csv",
            _SCORE_HEADER,
            _score_rows(r.records, config.intervals),
        )
        _write_csv(
            scen_dir / f"scenario_{r.index:03d}_raw.csv",
            _RAW_HEADER,
            _score_rows(r.raw_records, ()),
        )
        all_records.extend(r.records)
        all_raw.extend(r.raw_records)

    aggs = scoring.aggregate_by_lead(all_records)
    raw_aggs = scoring.aggregate_by_lead(all_raw)
    _write_csv(
        out / "aggregates.csv",
        ["lead_hours", "metric", "mean", "sd", "n"],
        _aggregate_rows(aggs) + _aggregate_rows(raw_aggs, prefix="raw_"),
    )
    point_rows = []
    for r in results:
        for rec in r.records:
            point_rows.append([rec.lead_hours, "crps", r.index, _fmt(rec.crps)])
    _write_csv(out / "points.csv", ["lead_hours", "metric", "scenario", "value"], point_rows)

    summary: Dict[str, object] = {
        "n_scenarios": len(results),
        "seed": config.seed,
        "train_rows_mean": _fmt(float(np.mean([r.train_rows for r in results]))),
        "skipped_rows_total": sum(r.skipped_rows for r in results),
        "unscored_hours_total": sum(r.unscored_hours for r in results),
        "degenerate_hours_total": sum(r.degenerate_hours for r in results),
        "mean_crps": _fmt(_finite_mean(all_records, "crps")),
        "mean_crps_raw": _fmt(_finite_mean(all_raw, "crps")),
        "mean_log_score": _fmt(_finite_mean(all_records, "log_score")),
        "mean_log_score_raw": _fmt(_finite_mean(all_raw, "log_score")),
        "mean_abs_err_median": _fmt(scoring.mae_median(all_records)),
        "mean_abs_err_median_raw": _fmt(scoring.mae_median(all_raw)),
    }
    for w in config.intervals:
        summary[f"coverage_{round(w * 100):d}"] = _fmt(
            scoring.interval_coverage(all_records, w)
        )
    with open(out / "summary.txt", "w") as fh:
        for key, value in summary.items():
            fh.write(f"{key}={value}\n")
    with open(out / "timings.txt", "w") as fh:
        fh.write(f"wall_seconds={wall:.3f}\n")
        for stage in ("prepare", "train", "predict", "score"):
            total = sum(r.timings.get(stage, 0.0) for r in results)
            fh.write(f"{stage}_seconds={total:.3f}\n")
    print(f"evaluated {len(results)} scenarios in {wall:.1f}s")
    for w in config.intervals:
        print(f"  {round(w * 100):d}% coverage: {scoring.interval_coverage(all_records, w):.3f}")
    print(f"  mean CRPS: {_finite_mean(all_records, 'crps'):.3f}"
          f" (raw comparator {_finite_mean(all_raw, 'crps'):.3f})")
    print(f"  reports in {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="probfcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("generate", help="write a seeded synthetic dataset")
    p_gen.add_argument("--config", help="flat synthesis config file")
    p_gen.add_argument("--out", help="output directory")
    p_gen.add_argument("--seed", type=int, help="generator seed (default 0)")
    p_gen.add_argument("--span-days", type=int, help="observation span in days")
    p_gen.set_defaults(func=cmd_generate)

    p_train = sub.add_parser("train", help="train a forest and report OOB coverage")
    _add_data_flags(p_train)
    _add_run_flags(p_train)
    p_train.add_argument("--origin", help="training window end (default: last observation + 1h)")
    p_train.add_argument("--save", help="forest output path (default <out>/forest.npz)")
    p_train.add_argument("--dump-errors", help="also write the error table CSV here")
    p_train.set_defaults(func=cmd_train)

    p_fc = sub.add_parser("forecast", help="full forecast products for one origin")
    _add_data_flags(p_fc)
    _add_run_flags(p_fc)
    p_fc.add_argument("--origin", help="forecast origin timestamp (required)")
    p_fc.add_argument(
        "--dump-cdf-hour", type=int, help="also dump (value, cdf) probe pairs at this lead hour"
    )
    p_fc.set_defaults(func=cmd_forecast)

    p_ev = sub.add_parser("evaluate", help="multi-scenario backtest with scoring")
    _add_data_flags(p_ev)
    _add_run_flags(p_ev)
    p_ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse -h/--help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
