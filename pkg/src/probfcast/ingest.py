"""Forecast/observation records, CSV interchange, and scenario slicing.

The interchange format is plain CSV with hour-aligned ISO-8601 UTC
timestamps:

* ``forecasts.csv``:    ``model_id,member,init_time,valid_time,value_degC``
  (``member`` empty for deterministic models)
* ``observations.csv``: ``valid_time,value_degC``

Sub-hourly timestamps are rejected rather than resampled, and forecast lead
times must fall within [0, 168] hours.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .exceptions import DataError

__all__ = [
    "MAX_LEAD_HOURS",
    "ForecastRecord",
    "ObservationRecord",
    "ScenarioWindow",
    "Dataset",
    "load_forecasts",
    "load_observations",
    "write_forecasts",
    "write_observations",
    "slice_scenario",
]

MAX_LEAD_HOURS = 168

FORECAST_HEADER = ["model_id", "member", "init_time", "valid_time", "value_degC"]
OBSERVATION_HEADER = ["valid_time", "value_degC"]


def parse_hour(text: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp that must fall on a whole hour."""
    raw = text.strip()
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    if ts.minute or ts.second or ts.microsecond:
        raise DataError(f"timestamp {text!r} is not hour-aligned")
    return ts


def format_hour(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%MZ")


@dataclass(frozen=True, slots=True)
class ForecastRecord:
    """One deterministic forecast value from one model run."""

    model_id: str
    member: Optional[int]
    init_time: datetime
    valid_time: datetime
    value: float

    @property
    def lead_hours(self) -> int:
        return int((self.valid_time - self.init_time) // timedelta(hours=1))


@dataclass(frozen=True, slots=True)
class ObservationRecord:
    valid_time: datetime
    value: float


@dataclass(frozen=True)
class ScenarioWindow:
    """Training window [origin - train_days, origin) and evaluation horizon."""

    forecast_origin: datetime
    train_days: int = 14
    horizon_hours: int = MAX_LEAD_HOURS

    def __post_init__(self) -> None:
        if self.train_days <= 0:
            raise ValueError("train_days must be positive")
        if self.horizon_hours <= 0:
            raise ValueError("horizon_hours must be positive")

    @property
    def train_start(self) -> datetime:
        return self.forecast_origin - timedelta(days=self.train_days)

    @property
    def eval_end(self) -> datetime:
        return self.forecast_origin + timedelta(hours=self.horizon_hours)


@dataclass
class Dataset:
    forecasts: List[ForecastRecord] = field(default_factory=list)
    observations: List[ObservationRecord] = field(default_factory=list)
    site_id: str = ""


def _sort_key(r: ForecastRecord) -> tuple:
    return (r.model_id, -1 if r.member is None else r.member, r.init_time, r.valid_time)


def load_forecasts(path: str | Path) -> List[ForecastRecord]:
    """Load forecasts.csv; any malformed row fails the whole load."""
    records: List[ForecastRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FORECAST_HEADER:
            raise DataError(f"{path}: expected header {','.join(FORECAST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            model_id, member_s, init_s, valid_s, value_s = row
            try:
                member = None if member_s.strip() == "" else int(member_s)
                if member is not None and member < 0:
                    raise ValueError("member must be non-negative")
                init_time = parse_hour(init_s)
                valid_time = parse_hour(valid_s)
                value = float(value_s)
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if valid_time < init_time:
                raise DataError(f"{path}:{lineno}: negative lead time")
            lead = (valid_time - init_time) // timedelta(hours=1)
            if lead > MAX_LEAD_HOURS:
                raise DataError(
                    f"{path}:{lineno}: lead hour {lead} outside [0, {MAX_LEAD_HOURS}]"
                )
            records.append(ForecastRecord(model_id, member, init_time, valid_time, value))
    records.sort(key=_sort_key)
    return records


def load_observations(path: str | Path) -> List[ObservationRecord]:
    """Load observations.csv; duplicate valid_times are rejected."""
    records: List[ObservationRecord] = []
    seen: Dict[datetime, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != OBSERVATION_HEADER:
            raise DataError(f"{path}: expected header {','.join(OBSERVATION_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                valid_time = parse_hour(row[0])
                value = float(row[1])
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if valid_time in seen:
                raise DataError(
                    f"{path}:{lineno}: duplicate observation at {format_hour(valid_time)}"
                    f" (first seen on line {seen[valid_time]})"
                )
            seen[valid_time] = lineno
            records.append(ObservationRecord(valid_time, value))
    records.sort(key=lambda r: r.valid_time)
    return records


def write_forecasts(path: str | Path, records: Sequence[ForecastRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.model_id,
                    "" if r.member is None else r.member,
                    format_hour(r.init_time),
                    format_hour(r.valid_time),
                    repr(r.value),
                ]
            )


def write_observations(path: str | Path, records: Sequence[ObservationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVATION_HEADER)
        for r in records:
            writer.writerow([format_hour(r.valid_time), repr(r.value)])


def slice_scenario(dataset: Dataset, window: ScenarioWindow) -> Tuple[Dataset, Dataset]:
    """Split a dataset into leak-free training and evaluation slices.

    Training keeps every forecast/observation with valid_time inside
    [origin - train_days, origin) (forecast init_time < origin as well, which
    the lead-time invariant already implies).  Evaluation keeps, per
    model_id, only the run with the latest init_time <= origin, restricted to
    valid times in [origin, origin + horizon], plus the observations there.
    """
    origin = window.forecast_origin
    if not dataset.observations:
        raise DataError("dataset has no observations")
    obs_min = min(o.valid_time for o in dataset.observations)
    obs_max = max(o.valid_time for o in dataset.observations)
    if obs_min > window.train_start or origin > obs_max + timedelta(hours=1):
        raise DataError(
            f"window not covered by dataset: training needs observations from "
            f"{format_hour(window.train_start)} but data spans "
            f"{format_hour(obs_min)}..{format_hour(obs_max)}"
        )

    train_fc = [
        f
        for f in dataset.forecasts
        if window.train_start <= f.valid_time < origin and f.init_time < origin
    ]
    train_obs = [
        o for o in dataset.observations if window.train_start <= o.valid_time < origin
    ]

    latest_init: Dict[str, datetime] = {}
    for f in dataset.forecasts:
        if f.init_time <= origin:
            cur = latest_init.get(f.model_id)
            if cur is None or f.init_time > cur:
                latest_init[f.model_id] = f.init_time
    if not latest_init:
        raise DataError("window not covered by dataset: no model run available at origin")
    eval_fc = [
        f
        for f in dataset.forecasts
        if latest_init.get(f.model_id) == f.init_time
        and origin <= f.valid_time <= window.eval_end
    ]
    eval_obs = [
        o for o in dataset.observations if origin <= o.valid_time <= window.eval_end
    ]
    train = Dataset(train_fc, train_obs, dataset.site_id)
    evaluation = Dataset(eval_fc, eval_obs, dataset.site_id)
    return train, evaluation
