"""Convex minorants, concave majorants and Grenander-type slope estimators."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .models import CensoredSample, Direction, Target
from .step_estimators import StepFunction, kaplan_meier, nelson_aalen

logger = logging.getLogger(__name__)

SLOPE_TOLERANCE = 1e-12
MONOTONE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1 or times.size == 0:
            raise DomainError("a piecewise-linear function needs matching, non-empty vertex arrays")
        if np.any(np.diff(times) <= 0):
            raise DomainError("duplicate or unordered vertex times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def vertices(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.times)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.start) or np.any(t > self.end):
            raise DomainError(f"evaluation outside [{self.start:g}, {self.end:g}]")
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def __neg__(self) -> PiecewiseLinear:
        return PiecewiseLinear(self.times, -self.values)


@dataclass(frozen=True, eq=False)
class MonotoneEstimate:
    """Piecewise-constant slope estimate.

    ``slopes[i]`` holds on ``(breakpoints[i], breakpoints[i+1]]``; the first
    slope also serves the left end point.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    direction: Direction

    def __post_init__(self):
        breakpoints = np.asarray(self.breakpoints, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if breakpoints.size != slopes.size + 1 or slopes.size == 0:
            raise DomainError("need one more breakpoint than slopes")
        if np.any(np.diff(breakpoints) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        steps = np.diff(slopes)
        scale = MONOTONE_TOLERANCE * max(1.0, float(np.max(np.abs(slopes))))
        if self.direction is Direction.INCREASING and np.any(steps < -scale):
            raise DomainError("slopes of an increasing estimate must be non-decreasing")
        if self.direction is Direction.DECREASING and np.any(steps > scale):
            raise DomainError("slopes of a decreasing estimate must be non-increasing")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "slopes", slopes)

    @property
    def start(self) -> float:
        return float(self.breakpoints[0])

    @property
    def end(self) -> float:
        return float(self.breakpoints[-1])

    def piece_index(self, x):
        """Index i of the piece (breakpoints[i], breakpoints[i+1]] containing x."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.start) or np.any(x > self.end):
            raise DomainError(
                f"estimate is defined on [{self.start:g}, {self.end:g}] only",
                {"start": self.start, "end": self.end},
            )
        return np.clip(np.searchsorted(self.breakpoints, x, side="left") - 1, 0, self.slopes.size - 1)

    def __call__(self, x):
        out = self.slopes[self.piece_index(x)]
        return float(out) if np.ndim(out) == 0 else out

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.breakpoints[:-1].tolist(), self.breakpoints[1:].tolist(), self.slopes.tolist()))


@dataclass(frozen=True)
class GrenanderFit:
    cumulative: StepFunction
    minorant: PiecewiseLinear
    estimate: MonotoneEstimate
    target: Target


def gcm_points(times, values) -> PiecewiseLinear:
    """Lower convex hull of a finite point set by a monotone-slope stack.

    At a repeated time only the lowest point matters. Near-collinear middle
    points are pooled away.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.lexsort((values, times))
    times, values = times[order], values[order]
    keep = np.append(True, times[1:] != times[:-1])
    times, values = times[keep], values[keep]

    hull_t: list[float] = []
    hull_v: list[float] = []
    for t, v in zip(times.tolist(), values.tolist()):
        while len(hull_t) >= 2:
            dt1, dv1 = hull_t[-1] - hull_t[-2], hull_v[-1] - hull_v[-2]
            dt2, dv2 = t - hull_t[-2], v - hull_v[-2]
            left, right = dt1 * dv2, dv1 * dt2
            # the middle point survives only if strictly below the chord
            if left - right > SLOPE_TOLERANCE * (abs(left) + abs(right)):
                break
            hull_t.pop()
            hull_v.pop()
        hull_t.append(t)
        hull_v.append(v)
    return PiecewiseLinear(np.array(hull_t), np.array(hull_v))


def _candidate_points(f: StepFunction, anchor: tuple[float, float], end: float):
    anchor_t, anchor_v = float(anchor[0]), float(anchor[1])
    if not end > anchor_t:
        raise DomainError(f"end {end:g} must exceed the anchor time {anchor_t:g}")
    knots = f.knots[(f.knots > anchor_t) & (f.knots <= end)]
    if knots.size == 0:
        raise DomainError(f"empty knot set in ({anchor_t:g}, {end:g}]")
    lows = np.minimum(f.left_limit(knots), f(knots))
    times = np.concatenate(([anchor_t], knots))
    values = np.concatenate(([anchor_v], lows))
    if knots[-1] < end:
        times = np.append(times, end)
        values = np.append(values, f(end))
    return times, values


def gcm(f: StepFunction, anchor: tuple[float, float] = (0.0, 0.0), end: float | None = None) -> PiecewiseLinear:
    """Greatest convex minorant of f on [anchor time, end]."""
    if end is None:
        if f.knots.size == 0:
            raise DomainError("empty knot set in range")
        end = float(f.knots[-1])
    return gcm_points(*_candidate_points(f, anchor, end))


def lcm(f: StepFunction, anchor: tuple[float, float] = (0.0, 0.0), end: float | None = None) -> PiecewiseLinear:
    """Least concave majorant, -gcm(-f)."""
    return -gcm(-f, (anchor[0], -anchor[1]), end)


def left_slopes(m: PiecewiseLinear, direction: Direction) -> MonotoneEstimate:
    if m.times.size < 2:
        raise DomainError("at least two vertices are needed for a slope estimate")
    return MonotoneEstimate(m.times, m.slopes, direction)


def sup_distance(f: StepFunction, m: PiecewiseLinear, interval: tuple[float, float] | None = None) -> float:
    """sup |f - m| over the interval, exact over knots, left limits and vertices."""
    lo, hi = interval if interval is not None else (m.start, m.end)
    if lo < m.start or hi > m.end or hi < lo:
        raise DomainError(f"interval [{lo:g}, {hi:g}] not covered by [{m.start:g}, {m.end:g}]")
    inside = lambda ts: ts[(ts >= lo) & (ts <= hi)]  # noqa: E731
    points = np.unique(np.concatenate(([lo, hi], inside(f.knots), inside(m.times))))
    m_at = m(points)
    gaps = np.abs(f(points) - m_at)
    interior = points > lo
    left_gaps = np.abs(f.left_limit(points[interior]) - m_at[interior])
    return float(max(gaps.max(), left_gaps.max(initial=0.0)))


def grenander_estimate(
    sample: CensoredSample,
    target: Target,
    direction: Direction = Direction.INCREASING,
    end: float | None = None,
) -> GrenanderFit:
    """Slope of the convex minorant (increasing) or concave majorant (decreasing)
    of the Nelson-Aalen (hazard) or Kaplan-Meier (density) estimator on [0, end].

    ``end`` defaults to the last observed time.
    """
    cumulative = nelson_aalen(sample) if target is Target.HAZARD else kaplan_meier(sample)
    end = float(sample.times[-1]) if end is None else float(end)
    envelope = gcm if direction is Direction.INCREASING else lcm
    minorant = envelope(cumulative, (0.0, 0.0), end)
    estimate = left_slopes(minorant, direction)
    logger.debug(
        "grenander %s/%s: n=%d end=%.4g vertices=%d", target.value, direction.value, sample.n, end, minorant.times.size
    )
    return GrenanderFit(cumulative, minorant, estimate, target)
