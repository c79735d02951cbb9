from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import ClassVar, Iterator

import numpy as np
from scipy import stats

from .config import DEFAULT_SEED
from .exceptions import ConfigurationError, DataError, DomainError, EmptySampleError


class Target(str, enum.Enum):
    HAZARD = "hazard"
    DENSITY = "density"


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


# the built-in density scenario is decreasing
DEFAULT_DIRECTION = {Target.HAZARD: Direction.INCREASING, Target.DENSITY: Direction.DECREASING}


def _positive(owner: str, **params: float) -> None:
    for name, value in params.items():
        if not (math.isfinite(value) and value > 0):
            raise ConfigurationError(f"{owner} {name} must be positive and finite, got {value}")


class Law(ABC):
    """Lifetime law on [0, upper] backed by a frozen scipy.stats distribution."""

    _STEP: ClassVar[float] = 1e-3

    @property
    @abstractmethod
    def distribution(self): ...

    @property
    def upper(self) -> float:
        return float(self.distribution.support()[1])

    def pdf(self, x):
        return self.distribution.pdf(x)

    def cdf(self, x):
        return self.distribution.cdf(x)

    def sf(self, x):
        return self.distribution.sf(x)

    def ppf(self, u):
        return self.distribution.ppf(u)

    def hazard(self, x):
        return self.pdf(x) / self.sf(x)

    def _second_difference(self, fn, x: float) -> float:
        h = self._STEP
        return float((-fn(x + 2 * h) + 16 * fn(x + h) - 30 * fn(x) + 16 * fn(x - h) - fn(x - 2 * h)) / (12 * h * h))

    def pdf_second_derivative(self, x: float) -> float:
        return self._second_difference(self.pdf, x)

    def hazard_second_derivative(self, x: float) -> float:
        return self._second_difference(self.hazard, x)

    def truth(self, target: Target, x):
        return self.hazard(x) if target is Target.HAZARD else self.pdf(x)

    def truth_second_derivative(self, target: Target, x: float) -> float:
        if target is Target.HAZARD:
            return self.hazard_second_derivative(x)
        return self.pdf_second_derivative(x)


@dataclass(frozen=True)
class Weibull(Law):
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        _positive("Weibull", shape=self.shape, scale=self.scale)

    @cached_property
    def distribution(self):
        return stats.weibull_min(c=self.shape, scale=self.scale)

    def hazard(self, x):
        z = np.asarray(x, dtype=float) / self.scale
        return self.shape / self.scale * z ** (self.shape - 1)

    def hazard_second_derivative(self, x: float) -> float:
        k = self.shape
        coef = k * (k - 1) * (k - 2) / self.scale**3
        if coef == 0:
            return 0.0
        z = x / self.scale
        if z < 0 or (z == 0 and k < 3):
            raise DomainError(f"Weibull({k:g}) hazard has no second derivative at x={x:g}", {"x": x})
        return float(coef * z ** (k - 3))


@dataclass(frozen=True)
class TruncatedExponential(Law):
    mean: float
    upper_bound: float

    def __post_init__(self):
        _positive("TruncatedExponential", mean=self.mean, upper=self.upper_bound)

    @cached_property
    def distribution(self):
        return stats.truncexpon(b=self.upper_bound / self.mean, scale=self.mean)

    def pdf_second_derivative(self, x: float) -> float:
        return float(self.pdf(x)) / self.mean**2


@dataclass(frozen=True)
class Uniform(Law):
    a: float
    b: float

    def __post_init__(self):
        _positive("Uniform", b=self.b)
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ConfigurationError(f"Uniform a must be non-negative, got {self.a}")
        if not self.a < self.b:
            raise ConfigurationError(f"Uniform requires a < b, got a={self.a}, b={self.b}")

    @cached_property
    def distribution(self):
        return stats.uniform(loc=self.a, scale=self.b - self.a)

    def pdf_second_derivative(self, x: float) -> float:
        return 0.0


EVENT_LAWS = (Weibull, TruncatedExponential)
CENSOR_LAWS = (Uniform, TruncatedExponential)


@dataclass(frozen=True)
class ScenarioSpec:
    event_law: Law
    censor_law: Law
    n: int
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not isinstance(self.event_law, EVENT_LAWS):
            raise ConfigurationError(f"unsupported event law {type(self.event_law).__name__}")
        if not isinstance(self.censor_law, CENSOR_LAWS):
            raise ConfigurationError(f"unsupported censoring law {type(self.censor_law).__name__}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"sample size must be a positive integer, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def with_n(self, n: int) -> ScenarioSpec:
        return replace(self, n=n)

    def with_seed(self, seed: int) -> ScenarioSpec:
        return replace(self, seed=seed)

    @property
    def follow_up_upper(self) -> float:
        return min(self.event_law.upper, self.censor_law.upper)

    def follow_up_cdf(self, x):
        return 1.0 - self.event_law.sf(x) * self.censor_law.sf(x)

    def follow_up_survival(self, x):
        return self.event_law.sf(x) * self.censor_law.sf(x)


@dataclass(frozen=True)
class CensoredObservation:
    time: float
    event: bool

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise DataError(f"time must be finite and non-negative, got {self.time}")


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """Follow-up times sorted ascending (stable for ties) with event indicators."""

    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        if self.times.ndim != 1 or self.times.shape != self.events.shape:
            raise DataError("times and events must be one-dimensional arrays of equal length")
        if self.times.size == 0:
            raise EmptySampleError()
        if not np.all(np.isfinite(self.times)) or np.any(self.times < 0):
            raise DataError("times must be finite and non-negative")
        if np.any(np.diff(self.times) < 0):
            raise DataError("times must be sorted ascending")
        self.times.flags.writeable = False
        self.events.flags.writeable = False

    @classmethod
    def from_arrays(cls, times, events) -> CensoredSample:
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        order = np.argsort(times, kind="stable")
        return cls(times=times[order].copy(), events=events[order].copy())

    @classmethod
    def from_observations(cls, observations) -> CensoredSample:
        observations = list(observations)
        return cls.from_arrays([o.time for o in observations], [o.event for o in observations])

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def observations(self) -> list[CensoredObservation]:
        return list(iter(self))

    @property
    def censored_fraction(self) -> float:
        return float(1.0 - self.events.mean())

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[CensoredObservation]:
        for t, d in zip(self.times, self.events):
            yield CensoredObservation(float(t), bool(d))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CensoredSample):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.events, other.events)


@dataclass(frozen=True)
class NamedScenario:
    """A built-in data-generating setup together with its study protocol."""

    name: str
    spec: ScenarioSpec
    target: Target
    direction: Direction
    x0: float
    reference_point: float
    bandwidth_constant: float
    n_grid: tuple[int, ...]
    sweep_points: tuple[float, ...] = field(default_factory=tuple)
    truncation_level: float | None = None

    def truth(self, x):
        return self.spec.event_law.truth(self.target, x)

    def truth_second_derivative(self, x: float) -> float:
        return self.spec.event_law.truth_second_derivative(self.target, x)


SCENARIOS: dict[str, NamedScenario] = {
    "weibull-hazard": NamedScenario(
        name="weibull-hazard",
        spec=ScenarioSpec(Weibull(3.0, 1.0), Uniform(0.0, 1.3), n=500),
        target=Target.HAZARD,
        direction=Direction.INCREASING,
        x0=0.5,
        reference_point=0.5,
        bandwidth_constant=1.2,
        n_grid=(100, 500, 1000, 5000),
        sweep_points=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
        truncation_level=0.9,
    ),
    "truncexp-density": NamedScenario(
        name="truncexp-density",
        spec=ScenarioSpec(TruncatedExponential(1.0, 5.0), TruncatedExponential(2.0, 5.0), n=500),
        target=Target.DENSITY,
        direction=Direction.DECREASING,
        x0=1.0,
        reference_point=2.5,
        bandwidth_constant=5.14,
        n_grid=(100, 500, 1000, 5000, 10000),
        sweep_points=(0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0),
    ),
}

TABLES = {1: "weibull-hazard", 2: "truncexp-density"}


def get_scenario(name: str) -> NamedScenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigurationError(f"unknown scenario {name!r}", {"known": sorted(SCENARIOS)})
