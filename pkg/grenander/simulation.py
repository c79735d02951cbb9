"""Monte Carlo studies: interval coverage, rate diagnostics and consistency sweeps.

Replication ``i`` draws its sample with seed ``base_seed + i``. Work items are
independent and may run in worker processes; results are sorted by
replication index before any reduction, so serial and parallel runs agree.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from . import inference
from .asymptotics import oracle_moments
from .config import DEFAULT_SEED, FAILURE_WARN_RATE
from .data import censoring_fraction, generate, quantile, truncation_point
from .exceptions import ConfigurationError, GrenanderError
from .isotonic import gcm, grenander_estimate, lcm, sup_distance
from .models import DEFAULT_DIRECTION, TABLES, CensoredSample, Direction, NamedScenario, Target, get_scenario
from .smoothing import BoundaryMode, KernelSpec, smooth_estimate, triweight
from .step_estimators import kaplan_meier, nelson_aalen

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["method", "target", "n", "x0", "average_length", "coverage", "failures", "replications"]


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers < 1:
        raise ConfigurationError(f"worker count must be positive, got {workers}")
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _sample(scenario: NamedScenario, n: int, seed: int) -> CensoredSample:
    return generate(scenario.spec.with_n(n).with_seed(seed))


def _estimate_end(scenario: NamedScenario, sample: CensoredSample) -> float | None:
    if scenario.truncation_level is None:
        return None
    return truncation_point(sample, scenario.truncation_level, scenario.spec)


@dataclass(frozen=True)
class StudySpec:
    scenario: NamedScenario
    methods: tuple[inference.Method, ...]
    x0_points: tuple[float, ...]
    n_grid: tuple[int, ...]
    replications: int
    alpha: float = 0.05
    base_seed: int = DEFAULT_SEED
    bandwidth_constant: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError(f"replications must be positive, got {self.replications}")
        if not self.methods:
            raise ConfigurationError("a study needs at least one method")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigurationError(f"sample sizes must be positive, got {list(self.n_grid)}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.base_seed + self.replications >= 2**64:
            raise ConfigurationError("replication seeds overflow 64 bits")
        upper = self.scenario.spec.follow_up_upper
        for x0 in self.x0_points:
            if not 0 < x0 < upper:
                raise ConfigurationError(f"x0={x0:g} is not interior to the follow-up support [0, {upper:g}]")
            if not math.isfinite(float(self.scenario.truth(x0))):
                raise ConfigurationError(f"scenario truth unavailable at x0={x0:g}")

    @property
    def c(self) -> float:
        return self.scenario.bandwidth_constant if self.bandwidth_constant is None else self.bandwidth_constant


@dataclass(frozen=True)
class CoverageRow:
    method: str
    target: str
    n: int
    x0: float
    average_length: float
    coverage: float
    failures: int
    replications: int


@dataclass
class CoverageReport:
    rows: list[CoverageRow]
    scenario: str
    censoring_fraction: float
    warnings: list[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(row) for row in self.rows], columns=REPORT_COLUMNS)

    def row(self, method: inference.Method | str, n: int, x0: float | None = None) -> CoverageRow:
        method = inference.Method(method).value
        for row in self.rows:
            if row.method == method and row.n == n and (x0 is None or math.isclose(row.x0, x0)):
                return row
        raise ConfigurationError(f"no report row for {method} at n={n}, x0={x0}")


def _replicate(study: StudySpec, task: tuple[int, int]) -> list[dict]:
    n, index = task
    scenario = study.scenario
    sample = _sample(scenario, n, study.base_seed + index)
    end = _estimate_end(scenario, sample)
    support = (0.0, end if end is not None else float(sample.times[-1]))
    records = []
    for x0 in study.x0_points:
        truth = float(scenario.truth(x0))
        for method in study.methods:
            record = {"method": method.value, "n": n, "x0": x0, "replication": index, "clipped": False}
            try:
                ci = inference.compute_interval(
                    method, sample, scenario.target, x0, study.c, study.alpha, direction=scenario.direction, end=end
                )
            except GrenanderError as exc:
                record.update(length=np.nan, covered=False, failure=type(exc).__name__)
            else:
                record.update(length=ci.length, covered=ci.contains(truth), failure=None)
                if method is inference.Method.SG_BIAS_ESTIMATE:
                    record["clipped"] = inference.bias_window_clipped(x0, study.c, n, support)
            records.append(record)
    return records


def _summarize(frame: pd.DataFrame, study: StudySpec) -> tuple[list[CoverageRow], list[str]]:
    rows, warnings = [], []
    rank = {m.value: i for i, m in enumerate(study.methods)}
    groups = sorted(frame.groupby(["method", "n", "x0"]), key=lambda item: (rank[item[0][0]], *item[0][1:]))
    for (method, n, x0), group in groups:
        ok = group[group["failure"].isna()]
        failures = len(group) - len(ok)
        rows.append(
            CoverageRow(
                method=method,
                target=study.scenario.target.value,
                n=int(n),
                x0=float(x0),
                average_length=float(ok["length"].mean()) if len(ok) else math.nan,
                coverage=float(ok["covered"].mean()) if len(ok) else math.nan,
                failures=int(failures),
                replications=len(group),
            )
        )
        if failures / len(group) > FAILURE_WARN_RATE:
            kinds = group["failure"].dropna().value_counts().to_dict()
            warnings.append(f"{method} n={n} x0={x0:g}: {failures}/{len(group)} replications failed {kinds}")
        clipped = int(group["clipped"].sum())
        if clipped:
            warnings.append(
                f"{method} n={n} x0={x0:g}: second-derivative window clipped at the support ends (local quadratic fit) in {clipped} replications"
            )
    return rows, warnings


def run_study(study: StudySpec) -> CoverageReport:
    tasks = [(n, index) for n in study.n_grid for index in range(study.replications)]
    logger.info(
        "study %s: %d sample sizes x %d replications, %d worker(s)",
        study.scenario.name,
        len(study.n_grid),
        study.replications,
        study.workers,
    )
    batches = _map(partial(_replicate, study), tasks, study.workers)
    frame = pd.DataFrame([record for batch in batches for record in batch])
    frame = frame.sort_values(["method", "n", "x0", "replication"], kind="stable").reset_index(drop=True)
    rows, warnings = _summarize(frame, study)
    for message in warnings:
        logger.warning(message)
    return CoverageReport(rows, study.scenario.name, censoring_fraction(study.scenario.spec), warnings)


def table_study(
    table: int,
    replications: int = 1000,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
    n_grid: Sequence[int] | None = None,
    methods: Iterable[inference.Method] = tuple(inference.Method),
) -> StudySpec:
    try:
        scenario = get_scenario(TABLES[table])
    except KeyError:
        raise ConfigurationError(f"unknown table {table}", {"known": sorted(TABLES)})
    return StudySpec(
        scenario=scenario,
        methods=tuple(methods),
        x0_points=(scenario.x0,),
        n_grid=tuple(n_grid or scenario.n_grid),
        replications=replications,
        base_seed=base_seed,
        workers=workers,
    )


def sweep_study(
    scenario: NamedScenario,
    replications: int = 1000,
    n: int = 500,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
    methods: Iterable[inference.Method] = tuple(inference.Method),
) -> StudySpec:
    """Coverage over the scenario's grid of points at one sample size."""
    if not scenario.sweep_points:
        raise ConfigurationError(f"scenario {scenario.name} has no sweep points")
    return StudySpec(
        scenario=scenario,
        methods=tuple(methods),
        x0_points=scenario.sweep_points,
        n_grid=(n,),
        replications=replications,
        base_seed=base_seed,
        workers=workers,
    )


@dataclass(frozen=True)
class RateResult:
    rows: list[tuple[int, float]]
    slope: float


def _envelope_distance(scenario: NamedScenario, target: Target, task: tuple[int, int]) -> float:
    n, seed = task
    sample = _sample(scenario, n, seed)
    end = truncation_point(sample, 0.9, scenario.spec)
    cumulative = nelson_aalen(sample) if target is Target.HAZARD else kaplan_meier(sample)
    direction = scenario.direction if target is scenario.target else DEFAULT_DIRECTION[target]
    envelope = gcm if direction is Direction.INCREASING else lcm
    return sup_distance(cumulative, envelope(cumulative, (0.0, 0.0), end), (0.0, end))


def kw_rate_study(
    scenario: NamedScenario,
    n_grid: Sequence[int],
    replications: int,
    target: Target | None = None,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> RateResult:
    """Median sup distance between the cumulative estimator and its envelope.

    The slope of log(median) against log(n) estimates the convergence rate,
    which should sit near -2/3.
    """
    n_grid = list(n_grid)
    if len(n_grid) < 3 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigurationError(f"need at least three increasing sample sizes, got {n_grid}")
    target = scenario.target if target is None else target
    tasks = [(n, base_seed + i) for n in n_grid for i in range(replications)]
    distances = np.asarray(_map(partial(_envelope_distance, scenario, target), tasks, workers))
    medians = np.median(distances.reshape(len(n_grid), replications), axis=1)
    slope = float(np.polyfit(np.log(n_grid), np.log(medians), 1)[0])
    logger.info("kw rate %s/%s: slope %.3f", scenario.name, target.value, slope)
    return RateResult([(n, float(m)) for n, m in zip(n_grid, medians)], slope)


def sup_error(estimate: Callable[[float], float], truth: Callable[[float], float], grid: Iterable[float]) -> float:
    return max(abs(estimate(x) - float(truth(x))) for x in grid)


def _consistency_error(
    scenario: NamedScenario,
    epsilon: float,
    mode: BoundaryMode,
    c: float,
    grid_size: int,
    kernel: KernelSpec,
    task: tuple[int, int],
) -> float:
    n, seed = task
    sample = _sample(scenario, n, seed)
    end = truncation_point(sample, 0.9, scenario.spec)
    fit = grenander_estimate(sample, scenario.target, scenario.direction, end)
    if mode is BoundaryMode.NONE:
        b = c * n ** (-1 / 5)
        grid = np.linspace(epsilon, end - epsilon, grid_size)
    else:
        b = c * n ** (-1 / 3)
        grid = np.linspace(0.0, end, grid_size)
    return sup_error(lambda x: smooth_estimate(fit.estimate, kernel, b, x, mode), scenario.truth, grid)


def consistency_sweep(
    scenario: NamedScenario,
    n_grid: Sequence[int],
    epsilon: float,
    mode: BoundaryMode = BoundaryMode.NONE,
    replications: int = 50,
    c: float = 1.0,
    grid_size: int = 200,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
    kernel: KernelSpec | None = None,
) -> list[tuple[int, float]]:
    """Median sup error of the smoothed estimate over [0, M] with M = H^{-1}(0.9).

    The standard kernel uses b = c·n^(-1/5) on [epsilon, M - epsilon]; the
    boundary-corrected one b = c·n^(-1/3) on the whole of [0, M].
    """
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    if 2 * epsilon >= quantile(scenario.spec, 0.9):
        raise ConfigurationError(f"epsilon={epsilon:g} leaves no interior grid")
    worker = partial(_consistency_error, scenario, epsilon, mode, c, grid_size, kernel or triweight())
    out = []
    for n in n_grid:
        errors = _map(worker, [(n, base_seed + i) for i in range(replications)], workers)
        out.append((n, float(np.median(errors))))
        logger.info("consistency %s/%s n=%d: median sup error %.4g", scenario.name, mode.value, n, out[-1][1])
    return out


@dataclass(frozen=True)
class BoundaryGain:
    x: float
    standard: float
    corrected: float


def _boundary_errors(scenario: NamedScenario, x: float, b: float, kernel: KernelSpec, task: tuple[int, int]):
    n, seed = task
    sample = _sample(scenario, n, seed)
    fit = grenander_estimate(sample, scenario.target, scenario.direction, truncation_point(sample, 0.9, scenario.spec))
    truth = float(scenario.truth(x))
    return tuple(abs(smooth_estimate(fit.estimate, kernel, b, x, mode) - truth) for mode in BoundaryMode)


def boundary_gain(
    scenario: NamedScenario,
    n: int = 1000,
    replications: int = 50,
    c: float = 1.0,
    fraction: float = 0.05,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
    kernel: KernelSpec | None = None,
) -> BoundaryGain:
    """Median absolute error at x = fraction·M with and without the boundary kernel, same bandwidth."""
    x = fraction * quantile(scenario.spec, 0.9)
    b = c * n ** (-1 / 5)
    worker = partial(_boundary_errors, scenario, x, b, kernel or triweight())
    errors = np.asarray(_map(worker, [(n, base_seed + i) for i in range(replications)], workers))
    standard, corrected = np.median(errors, axis=0)
    return BoundaryGain(x, float(standard), float(corrected))


@dataclass(frozen=True)
class NormalityResult:
    mean: float
    variance: float
    oracle_variance: float
    p_value: float

    @property
    def variance_ratio(self) -> float:
        return self.variance / self.oracle_variance


def _standardized_error(scenario: NamedScenario, x0: float, c: float, kernel: KernelSpec, task: tuple[int, int]):
    n, seed = task
    sample = _sample(scenario, n, seed)
    fit = grenander_estimate(sample, scenario.target, scenario.direction, _estimate_end(scenario, sample))
    value = smooth_estimate(fit.estimate, kernel, c * n ** (-1 / 5), x0)
    return n**0.4 * (value - float(scenario.truth(x0)))


def normality_check(
    scenario: NamedScenario,
    n: int = 5000,
    replications: int = 2000,
    c: float | None = None,
    x0: float | None = None,
    base_seed: int = DEFAULT_SEED,
    workers: int = 1,
    kernel: KernelSpec | None = None,
) -> NormalityResult:
    """Standardized errors n^(2/5)(estimate - truth) centered by the oracle mu.

    Reports the omnibus normality p-value and the variance to compare with
    the oracle sigma².
    """
    kernel = kernel or triweight()
    c = scenario.bandwidth_constant if c is None else c
    x0 = scenario.x0 if x0 is None else x0
    moments = oracle_moments(scenario, x0, c, kernel)
    worker = partial(_standardized_error, scenario, x0, c, kernel)
    errors = np.asarray(_map(worker, [(n, base_seed + i) for i in range(replications)], workers)) - moments.mu
    _, p_value = stats.normaltest(errors)
    return NormalityResult(float(errors.mean()), float(errors.var(ddof=1)), moments.sigma2, float(p_value))
