"""Step-function estimators on censored samples.

Risk sets count every observation with T_j >= t, so at a tied time the
uncensored observations are ranked before the censored ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .models import CensoredSample


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function on [0, inf).

    ``values[i]`` holds on ``[knots[i], knots[i+1])`` and ``value_at_origin``
    on ``[0, knots[0])``.
    """

    knots: np.ndarray
    values: np.ndarray
    value_at_origin: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots.ndim != 1:
            raise DomainError("knots and values must be one-dimensional arrays of equal length")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "value_at_origin", float(self.value_at_origin))

    def _lookup(self, idx):
        padded = np.concatenate(([self.value_at_origin], self.values))
        out = padded[idx + 1]
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, t):
        return self._lookup(np.searchsorted(self.knots, t, side="right") - 1)

    def left_limit(self, t):
        """f(t-), the value just before t."""
        return self._lookup(np.searchsorted(self.knots, t, side="left") - 1)

    def __neg__(self) -> StepFunction:
        return StepFunction(self.knots, -self.values, -self.value_at_origin)

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.knots.tolist(), self.values.tolist()))


def _event_table(sample: CensoredSample):
    """Distinct uncensored times with event counts and risk-set sizes."""
    times = sample.times
    event_times, deaths = np.unique(times[sample.events], return_counts=True)
    at_risk = sample.n - np.searchsorted(times, event_times, side="left")
    return event_times, deaths, at_risk


def nelson_aalen(sample: CensoredSample) -> StepFunction:
    event_times, deaths, at_risk = _event_table(sample)
    return StepFunction(event_times, np.cumsum(deaths / at_risk), 0.0)


def kaplan_meier(sample: CensoredSample) -> StepFunction:
    event_times, deaths, at_risk = _event_table(sample)
    survival = np.cumprod(1.0 - deaths / at_risk)
    return StepFunction(event_times, np.clip(1.0 - survival, 0.0, 1.0), 0.0)


def empirical_h(sample: CensoredSample) -> StepFunction:
    distinct, counts = np.unique(sample.times, return_counts=True)
    return StepFunction(distinct, np.cumsum(counts) / sample.n, 0.0)


def censoring_mp(sample: CensoredSample) -> StepFunction:
    """Censoring distribution estimate that stays below one.

    On [T_(k-1), T_(k)) the value is 1 - prod_{i<k} ((n-i+1)/(n-i+2))^(1-Δ_i),
    zero before T_(1); the supremum is at most 1 - 1/(n+1).
    """
    n = sample.n
    # uncensored first within tied times
    order = np.lexsort((~sample.events, sample.times))
    times = sample.times[order]
    censored = ~sample.events[order]
    i = np.arange(1, n + 1)
    factors = np.where(censored, (n - i + 1) / (n - i + 2), 1.0)
    values = 1.0 - np.cumprod(factors)
    # a tied block keeps the value reached after its last member
    last_of_block = np.append(times[1:] != times[:-1], True)
    return StepFunction(times[last_of_block], values[last_of_block], 0.0)
