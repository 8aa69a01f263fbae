"""Quantile vectors, the shared probability-level grid, and quantile averaging.

Every stage of the pipeline exchanges predictive distributions as paired
(level, value) arrays on one shared grid, so combining forecasts for an hour
reduces to a per-level arithmetic mean.  Averaging quantile functions keeps
the location, scale, and shape of the result close to the average of the
inputs, and its calibration does not depend on how many forecasts happen to
cover the hour.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

import numpy as np

__all__ = [
    "DEFAULT_LEVELS",
    "QuantileVector",
    "CombinedForecast",
    "vincentize",
    "combine_timestep",
]


def _default_levels() -> np.ndarray:
    # Percent grid plus the 90%/95% central-interval endpoints, so interval
    # bounds can be read either directly off the grid or from the
    # interpolated CDF with identical results.
    levels = {i / 100.0 for i in range(1, 100)}
    levels.update((0.025, 0.05, 0.95, 0.975))
    return np.array(sorted(levels), dtype=float)


#: Shared level grid used by the whole pipeline (101 strictly increasing levels).
DEFAULT_LEVELS = _default_levels()


@dataclass(eq=False)
class QuantileVector:
    """Paired probability levels and quantile values.

    levels must be strictly increasing within (0, 1); values must be
    non-decreasing, finite, and the same length as levels.
    """

    levels: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.levels = np.atleast_1d(np.asarray(self.levels, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.levels.shape != self.values.shape:
            raise ValueError("levels and values must have the same length")
        if self.levels.size == 0:
            raise ValueError("empty quantile vector")
        if self.levels[0] <= 0.0 or self.levels[-1] >= 1.0 or np.any(np.diff(self.levels) <= 0):
            raise ValueError("levels must be strictly increasing within (0, 1)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("quantile values must be finite")
        if np.any(np.diff(self.values) < 0):
            raise ValueError("quantile values must be non-decreasing")

    def shifted(self, offset: float) -> "QuantileVector":
        """Translate every quantile value by a constant."""
        return QuantileVector(self.levels, self.values + float(offset))

    def value_at(self, level: float) -> float:
        """Value at an exact grid level (raises if the level is not on the grid)."""
        idx = int(np.searchsorted(self.levels, level))
        if idx >= self.levels.size or self.levels[idx] != level:
            raise KeyError(f"level {level} is not on the grid")
        return float(self.values[idx])


@dataclass(eq=False)
class CombinedForecast:
    """Quantile-averaged forecast for one valid hour."""

    valid_time: datetime
    lead_hours: int
    quantiles: QuantileVector
    contributing_count: int

    def __post_init__(self) -> None:
        if self.contributing_count < 1:
            raise ValueError("contributing_count must be >= 1")


def vincentize(inputs: Sequence[QuantileVector]) -> QuantileVector:
    """Average quantile vectors level-by-level.

    All inputs must share an identical level grid.  The mean of non-decreasing
    sequences is non-decreasing, so the result is a valid quantile vector.
    """
    if len(inputs) == 0:
        raise ValueError("vincentize requires at least one input")
    levels = inputs[0].levels
    for q in inputs[1:]:
        if not np.array_equal(q.levels, levels):
            raise ValueError("all inputs must share identical levels")
    stacked = np.vstack([q.values for q in inputs])
    # Summing each level's values in sorted order makes the mean exactly
    # invariant to the order the forecasts arrive in.
    values = np.mean(np.sort(stacked, axis=0), axis=0)
    return QuantileVector(levels, values)


def combine_timestep(forecasts: Sequence, lead_hours: int | None = None) -> CombinedForecast:
    """Combine the probabilistic forecasts covering one valid time.

    ``forecasts`` is a non-empty list of objects with ``valid_time``,
    ``lead_hours`` and ``quantiles`` attributes (one per contributing model
    label).  ``lead_hours`` optionally fixes the lead recorded on the output;
    by default the smallest input lead (the freshest forecast) is used.
    """
    if len(forecasts) == 0:
        raise ValueError("combine_timestep requires at least one forecast")
    valid_time = forecasts[0].valid_time
    for f in forecasts[1:]:
        if f.valid_time != valid_time:
            raise ValueError("all forecasts must share the same valid_time")
    combined = vincentize([f.quantiles for f in forecasts])
    if lead_hours is None:
        lead_hours = min(int(f.lead_hours) for f in forecasts)
    return CombinedForecast(
        valid_time=valid_time,
        lead_hours=int(lead_hours),
        quantiles=combined,
        contributing_count=len(forecasts),
    )
