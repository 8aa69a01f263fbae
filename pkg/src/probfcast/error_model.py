"""Forecast-error training tables and deterministic-to-probabilistic conversion.

Errors are plain differences, observation minus forecast, in degC.  Each
(forecast, matching observation) pair yields one training row, so an hour
covered by many runs contributes one row per run.  Exchangeable ensemble
members are first re-labelled by their rank within each run/valid-time
group, which turns an N-member ensemble into N distinct model labels with
individually learnable error profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from .combine import QuantileVector
from .exceptions import DataError
from .ingest import Dataset, ForecastRecord

__all__ = [
    "ErrorSample",
    "ErrorTable",
    "ProbabilisticForecast",
    "rank_label_members",
    "build_error_table",
    "to_probabilistic",
]


@dataclass(frozen=True, slots=True)
class ErrorSample:
    lead_hours: int
    model_label: str
    error: float


@dataclass(eq=False)
class ErrorTable:
    """Array-backed table of (lead_hours, model_label, error) training rows."""

    lead_hours: np.ndarray
    label_codes: np.ndarray
    errors: np.ndarray
    label_set: Tuple[str, ...]
    skipped: int = 0

    def __post_init__(self) -> None:
        self.lead_hours = np.asarray(self.lead_hours, dtype=np.int64)
        self.label_codes = np.asarray(self.label_codes, dtype=np.int64)
        self.errors = np.asarray(self.errors, dtype=float)
        if not (self.lead_hours.shape == self.label_codes.shape == self.errors.shape):
            raise ValueError("column lengths differ")
        if self.label_codes.size and (
            self.label_codes.min() < 0 or self.label_codes.max() >= len(self.label_set)
        ):
            raise ValueError("label code outside label_set")
        if self.errors.size and not np.all(np.isfinite(self.errors)):
            raise ValueError("errors must be finite")

    @property
    def n_rows(self) -> int:
        return int(self.errors.size)

    def samples(self) -> Iterator[ErrorSample]:
        for lead, code, err in zip(self.lead_hours, self.label_codes, self.errors):
            yield ErrorSample(int(lead), self.label_set[code], float(err))

    @classmethod
    def from_samples(cls, samples: Iterable[ErrorSample], skipped: int = 0) -> "ErrorTable":
        rows = list(samples)
        labels = tuple(sorted({s.model_label for s in rows}))
        code = {lab: i for i, lab in enumerate(labels)}
        return cls(
            lead_hours=np.array([s.lead_hours for s in rows], dtype=np.int64),
            label_codes=np.array([code[s.model_label] for s in rows], dtype=np.int64),
            errors=np.array([s.error for s in rows], dtype=float),
            label_set=labels,
            skipped=skipped,
        )


@dataclass(eq=False)
class ProbabilisticForecast:
    """A deterministic forecast widened by its conditional error quantiles."""

    model_label: str
    valid_time: datetime
    lead_hours: int
    quantiles: QuantileVector


def rank_label_members(records: Sequence[ForecastRecord]) -> List[ForecastRecord]:
    """Re-label ensemble members by value rank within each run/valid-time group.

    Members of the same (model_id, init_time, valid_time) group get labels
    ``<model_id>_r<k>`` with k the 1-based ascending rank of their value;
    ties fall back to the original member index.  Relabelled records drop
    their member index, making the operation idempotent.  Records without a
    member index pass through unchanged, and output order/cardinality match
    the input.
    """
    groups: dict[tuple, List[int]] = {}
    for i, r in enumerate(records):
        if r.member is not None:
            groups.setdefault((r.model_id, r.init_time, r.valid_time), []).append(i)
    out: List[ForecastRecord] = list(records)
    for idxs in groups.values():
        ranked = sorted(idxs, key=lambda i: (records[i].value, records[i].member))
        for k, i in enumerate(ranked, start=1):
            r = records[i]
            out[i] = replace(r, model_id=f"{r.model_id}_r{k}", member=None)
    return out


def build_error_table(train: Dataset) -> ErrorTable:
    """One row per (forecast, matching observation): error = obs - forecast.

    Forecasts whose valid hour has no observation are skipped and counted.
    Ensemble members must already be rank-labelled.
    """
    obs_by_time = {o.valid_time: o.value for o in train.observations}
    leads: List[int] = []
    labels: List[str] = []
    errors: List[float] = []
    skipped = 0
    for f in train.forecasts:
        y = obs_by_time.get(f.valid_time)
        if y is None:
            skipped += 1
            continue
        leads.append(f.lead_hours)
        labels.append(f.model_id)
        errors.append(y - f.value)
    if not errors:
        raise DataError("no overlap between forecasts and observations")
    label_set = tuple(sorted(set(labels)))
    code = {lab: i for i, lab in enumerate(label_set)}
    return ErrorTable(
        lead_hours=np.array(leads, dtype=np.int64),
        label_codes=np.array([code[lab] for lab in labels], dtype=np.int64),
        errors=np.array(errors, dtype=float),
        label_set=label_set,
        skipped=skipped,
    )


def to_probabilistic(
    forecast: ForecastRecord, error_quantiles: QuantileVector
) -> ProbabilisticForecast:
    """Add conditional error quantiles to a deterministic forecast value.

    ``error_quantiles`` must be conditional on the forecast's (lead_hours,
    model label); the shift preserves levels and monotonicity exactly.
    Non-monotone inputs are rejected by the QuantileVector type itself.
    """
    return ProbabilisticForecast(
        model_label=forecast.model_id,
        valid_time=forecast.valid_time,
        lead_hours=forecast.lead_hours,
        quantiles=error_quantiles.shifted(forecast.value),
    )
