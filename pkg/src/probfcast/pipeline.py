"""Scenario orchestration: train -> convert -> combine -> distribute -> score.

One forest is trained per scenario over all model labels jointly (the label
is a covariate), then every hour of the horizon is forecast by shifting the
conditional error quantiles of each current model run, quantile-averaging
across models, and interpolating the result into a full distribution.
Scored hours run from one hour after the forecast origin out to the horizon;
hours no current run covers are skipped and counted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import qrf, scoring
from .combine import DEFAULT_LEVELS, CombinedForecast, QuantileVector, combine_timestep
from .dist import PiecewiseCDF, build_cdf
from .error_model import build_error_table, rank_label_members, to_probabilistic
from .exceptions import DataError
from .ingest import Dataset, ForecastRecord, ScenarioWindow, slice_scenario

__all__ = [
    "RunConfig",
    "HourProducts",
    "ScenarioResult",
    "admissible_origins",
    "draw_origins",
    "run_scenario",
    "run_scenarios",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything a scenario run needs beyond the dataset itself."""

    num_trees: int = 250
    mtry: int = 1
    min_node_size: int = 1
    sample_count: int = 128
    replace: bool = False
    n_scenarios: int = 200
    train_days: int = 14
    horizon_hours: int = 168
    seed: int = 0
    levels: np.ndarray = field(default_factory=lambda: DEFAULT_LEVELS.copy())
    threshold: float = 0.0
    draws: int = 1000
    min_training_rows: int = 1000
    intervals: Tuple[float, ...] = scoring.DEFAULT_INTERVALS
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")

    def forest_config(self, scenario_index: int = 0) -> qrf.ForestConfig:
        # Wide per-scenario seed stride keeps per-tree streams disjoint.
        return qrf.ForestConfig(
            num_trees=self.num_trees,
            mtry=self.mtry,
            min_node_size=self.min_node_size,
            sample_count=self.sample_count,
            seed=self.seed + 1_000_003 * (scenario_index + 1),
            replace=self.replace,
        )


@dataclass(eq=False)
class HourProducts:
    """Plot-ready outputs for one forecast hour."""

    valid_time: datetime
    lead_hours: int
    combined: CombinedForecast
    distribution: PiecewiseCDF
    prob_below: float
    prob_below_sampled: float
    samples: np.ndarray


@dataclass(eq=False)
class ScenarioResult:
    index: int
    origin: datetime
    records: List[scoring.ScoreRecord]
    raw_records: List[scoring.ScoreRecord]
    train_rows: int
    skipped_rows: int
    unscored_hours: int
    degenerate_hours: int
    timings: Dict[str, float]
    products: List[HourProducts] = field(default_factory=list)


def admissible_origins(dataset: Dataset, config: RunConfig) -> List[datetime]:
    """Origins whose training window and horizon are fully inside the data.

    Candidates align with the initialization cycle of the longest-range
    model, so the freshest long-range run launches at the origin and every
    hour of the horizon is covered.  A further margin of one horizon after
    the training window keeps the long-lead training rows fully populated.
    """
    if not dataset.observations or not dataset.forecasts:
        raise DataError("dataset is empty")
    obs_times = sorted(o.valid_time for o in dataset.observations)
    start, end = obs_times[0], obs_times[-1]
    max_lead: Dict[str, int] = {}
    cycle: Dict[str, set] = {}
    for f in dataset.forecasts:
        lead = f.lead_hours
        if lead > max_lead.get(f.model_id, -1):
            max_lead[f.model_id] = lead
        cycle.setdefault(f.model_id, set()).add(f.init_time)
    long_model = max(max_lead, key=lambda m: (max_lead[m], m))
    inits = sorted(cycle[long_model])
    earliest = start + timedelta(days=config.train_days, hours=config.horizon_hours)
    latest = end - timedelta(hours=config.horizon_hours)
    origins = [t for t in inits if earliest <= t <= latest]
    if not origins:
        raise DataError(
            "dataset too short: no admissible origin leaves room for "
            f"{config.train_days} training days plus a {config.horizon_hours}h horizon"
        )
    return origins


def draw_origins(dataset: Dataset, config: RunConfig) -> List[datetime]:
    """Sample n_scenarios origins uniformly (with replacement), seeded."""
    candidates = admissible_origins(dataset, config)
    rng = np.random.default_rng(config.seed)
    picks = rng.integers(0, len(candidates), size=config.n_scenarios)
    return [candidates[int(i)] for i in picks]


def _score_hour(
    d: PiecewiseCDF,
    combined: CombinedForecast,
    y: float,
    intervals: Sequence[float],
) -> scoring.ScoreRecord:
    median = float(d.quantile(0.5))
    hits: Dict[float, bool] = {}
    for w in intervals:
        lo = float(d.quantile((1.0 - w) / 2.0))
        hi = float(d.quantile((1.0 + w) / 2.0))
        hits[w] = bool(lo <= y <= hi)
    if d.is_degenerate:
        crps_val = scoring.crps(d, y)
        log_val = float("nan")
    else:
        crps_val = scoring.crps(d, y)
        log_val = scoring.log_score(d, y)
    return scoring.ScoreRecord(
        valid_time=combined.valid_time,
        lead_hours=combined.lead_hours,
        crps=crps_val,
        log_score=log_val,
        abs_error_median=abs(y - median),
        interval_hits=hits,
    )


def _score_raw_hour(
    values: Sequence[float],
    valid_time: datetime,
    lead_hours: int,
    y: float,
    levels: np.ndarray,
) -> scoring.ScoreRecord:
    """Raw-model comparator: empirical-ensemble CRPS, median MAE, and a log
    score from the member quantiles run through the same CDF interpolation
    (absent below two distinct members)."""
    arr = np.asarray(values, dtype=float)
    crps_val = scoring.crps_ensemble(arr, y)
    abs_err = abs(y - float(np.median(arr)))
    log_val = float("nan")
    if np.unique(arr).size >= 2:
        member_q = QuantileVector(levels, np.quantile(arr, levels))
        d = build_cdf(member_q)
        if not d.is_degenerate:
            log_val = scoring.log_score(d, y)
    return scoring.ScoreRecord(
        valid_time=valid_time,
        lead_hours=lead_hours,
        crps=crps_val,
        log_score=log_val,
        abs_error_median=abs_err,
        interval_hits={},
    )


def run_scenario(
    dataset: Dataset,
    origin: datetime,
    config: RunConfig,
    scenario_index: int = 0,
    with_products: bool = False,
    score: bool = True,
) -> ScenarioResult:
    """Run the full pipeline for one forecast origin.

    With ``score=True`` every covered hour needs an observation; with
    ``score=False`` (operational forecasting) only products are built.
    """
    timings: Dict[str, float] = {}
    t0 = time.perf_counter()
    window = ScenarioWindow(origin, config.train_days, config.horizon_hours)
    train_ds, eval_ds = slice_scenario(dataset, window)

    labelled = rank_label_members(train_ds.forecasts)
    table = build_error_table(Dataset(labelled, train_ds.observations, train_ds.site_id))
    if table.n_rows < config.min_training_rows:
        raise DataError(
            f"insufficient training data: {table.n_rows} rows < {config.min_training_rows}"
        )
    # Leakage guard: nothing at or after the origin may reach training.
    latest_obs = max(o.valid_time for o in train_ds.observations)
    if latest_obs >= origin:
        raise RuntimeError("internal error: training slice leaked an evaluation observation")
    timings["prepare"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    forest = qrf.train(table, config.forest_config(scenario_index))
    timings["train"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    eval_fc = rank_label_members(eval_ds.forecasts)
    by_hour: Dict[datetime, List[ForecastRecord]] = {}
    for f in eval_fc:
        by_hour.setdefault(f.valid_time, []).append(f)
    obs_by_time = {o.valid_time: o.value for o in eval_ds.observations}

    pairs = sorted({(f.lead_hours, f.model_id) for fs in by_hour.values() for f in fs})
    matrix = qrf.predict_quantiles_batch(
        forest, [p[0] for p in pairs], [p[1] for p in pairs], config.levels
    )
    error_q = {
        pair: QuantileVector(config.levels, matrix[i]) for i, pair in enumerate(pairs)
    }
    timings["predict"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    records: List[scoring.ScoreRecord] = []
    raw_records: List[scoring.ScoreRecord] = []
    products: List[HourProducts] = []
    unscored = 0
    degenerate = 0
    for h in range(1, config.horizon_hours + 1):
        valid = origin + timedelta(hours=h)
        group = by_hour.get(valid)
        if not group:
            unscored += 1
            continue
        prob_forecasts = [
            to_probabilistic(f, error_q[(f.lead_hours, f.model_id)]) for f in group
        ]
        combined = combine_timestep(prob_forecasts, lead_hours=h)
        d = build_cdf(combined.quantiles)
        if d.is_degenerate:
            degenerate += 1
        if score:
            y = obs_by_time.get(valid)
            if y is None:
                raise DataError(f"no observation to score at {valid.isoformat()}")
            records.append(_score_hour(d, combined, y, config.intervals))
            raw_records.append(
                _score_raw_hour([f.value for f in group], valid, h, y, config.levels)
            )
        if with_products:
            draws = d.sample(config.draws, seed=config.seed + 7 * h + 1)
            products.append(
                HourProducts(
                    valid_time=valid,
                    lead_hours=h,
                    combined=combined,
                    distribution=d,
                    prob_below=d.prob_below(config.threshold),
                    prob_below_sampled=float(np.mean(draws < config.threshold)),
                    samples=draws,
                )
            )
    timings["score"] = time.perf_counter() - t0

    return ScenarioResult(
        index=scenario_index,
        origin=origin,
        records=records,
        raw_records=raw_records,
        train_rows=table.n_rows,
        skipped_rows=table.skipped,
        unscored_hours=unscored,
        degenerate_hours=degenerate,
        timings=timings,
        products=products,
    )


def _run_chunk(args) -> List[ScenarioResult]:
    dataset, origins_with_index, config = args
    return [
        run_scenario(dataset, origin, config, scenario_index=i)
        for i, origin in origins_with_index
    ]


def run_scenarios(
    dataset: Dataset, config: RunConfig, origins: Optional[List[datetime]] = None
) -> List[ScenarioResult]:
    """Evaluate many seeded scenarios, optionally across a process pool.

    Results are returned in scenario order regardless of worker scheduling,
    so downstream reports are identical for any ``jobs`` setting.
    """
    if origins is None:
        origins = draw_origins(dataset, config)
    indexed = list(enumerate(origins))
    if config.jobs <= 1 or len(indexed) == 1:
        return _run_chunk((dataset, indexed, config))
    from concurrent.futures import ProcessPoolExecutor

    jobs = min(config.jobs, len(indexed))
    chunks = [(dataset, indexed[i::jobs], config) for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    merged: List[ScenarioResult] = [r for part in parts for r in part]
    merged.sort(key=lambda r: r.index)
    return merged
