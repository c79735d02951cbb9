"""Pointwise confidence intervals at x0.

Raw Grenander estimates converge at the cube-root rate to a Chernoff law, so
their intervals use the tabulated Chernoff quantile. Smoothed estimates are
asymptotically normal at rate n^(2/5); their intervals either undersmooth
(b = c·n^(-1/4), no bias term) or estimate the bias with a second, wider
bandwidth (b = c·n^(-5/17), b1 = c·n^(-1/17)).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass
from typing import Callable

from scipy import stats

from .asymptotics import SmoothedContext, plug_in_moments
from .config import TRUNCATION_LEVEL
from .data import truncation_point
from .exceptions import BandwidthMarginError, ConfigurationError, DerivativeUndefinedError, SurvivalZeroError
from .isotonic import GrenanderFit, MonotoneEstimate, grenander_estimate
from .models import DEFAULT_DIRECTION, CensoredSample, Direction, Target
from .smoothing import KernelSpec, smooth_estimate, triweight
from .step_estimators import StepFunction, censoring_mp, empirical_h

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    GRENANDER_CHERNOFF = "grenander"
    SG_UNDERSMOOTH = "sg-under"
    SG_BIAS_ESTIMATE = "sg-bias"


@dataclass(frozen=True)
class ChernoffQuantile:
    p: float
    q: float

    def __post_init__(self):
        if self.p > 0.5 and not self.q > 0:
            raise ConfigurationError(f"Chernoff quantile at p={self.p} must be positive, got {self.q}")


# q(Z, 0.975) of the argmin of two-sided Brownian motion plus t²
CHERNOFF_QUANTILES = {0.975: ChernoffQuantile(0.975, 0.998181)}


def chernoff_quantile(p: float) -> ChernoffQuantile:
    try:
        return CHERNOFF_QUANTILES[round(p, 10)]
    except KeyError:
        raise ConfigurationError(
            f"no Chernoff quantile tabulated at p={p:g}", {"tabulated": sorted(CHERNOFF_QUANTILES)}
        )


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    lower: float
    upper: float
    method: Method
    target: Target
    x0: float
    alpha: float

    def __post_init__(self):
        if not self.lower <= self.center <= self.upper:
            raise ConfigurationError(
                f"interval [{self.lower:g}, {self.upper:g}] does not contain its center {self.center:g}"
            )

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        row = asdict(self)
        row["method"] = self.method.value
        row["target"] = self.target.value
        return row


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")


def normal_quantile(alpha: float) -> float:
    """z_{1-alpha/2}."""
    _check_alpha(alpha)
    return float(stats.norm.ppf(1 - alpha / 2))


def default_end(sample: CensoredSample, target: Target) -> float | None:
    """Hazard estimates stop at the truncation point, density estimates at the last observation."""
    if target is Target.HAZARD:
        return truncation_point(sample, TRUNCATION_LEVEL)
    return None


def survival_cdf(sample: CensoredSample, target: Target) -> StepFunction:
    """H_n for hazards, the censoring estimate G_n for densities."""
    return empirical_h(sample) if target is Target.HAZARD else censoring_mp(sample)


def _survival_at(sample: CensoredSample, target: Target, x0: float) -> float:
    survival = 1.0 - survival_cdf(sample, target)(x0)
    if survival <= 0:
        raise SurvivalZeroError(x0)
    return survival


def jump_derivative(estimate: MonotoneEstimate, x0: float) -> float:
    """Slope difference quotient across the two jumps bracketing x0.

    With tau_{m-1} < x0 <= tau_m succeeding jump points the derivative is
    (est(tau_m) - est(tau_{m-1})) / (tau_m - tau_{m-1}). The outer
    breakpoints are not jumps.
    """
    if not estimate.start < x0 <= estimate.end:
        raise DerivativeUndefinedError(x0)
    i = int(estimate.piece_index(x0))
    if i == 0 or i == estimate.slopes.size - 1:
        raise DerivativeUndefinedError(x0)
    left, right = estimate.breakpoints[i], estimate.breakpoints[i + 1]
    return float((estimate.slopes[i] - estimate.slopes[i - 1]) / (right - left))


def chernoff_half_width(n: int, value: float, derivative: float, survival: float, q: float) -> float:
    """n^(-1/3)·|4·value·derivative / survival|^(1/3)·q."""
    return n ** (-1 / 3) * abs(4 * value * derivative / survival) ** (1 / 3) * q


def normal_half_width(n: int, sigma: float, z: float, mu: float = 0.0) -> float:
    """|n^(-2/5)(sigma·z + mu)|."""
    return abs(n ** (-0.4) * (sigma * z + mu))


def _fit(sample, target, direction, end) -> GrenanderFit:
    direction = DEFAULT_DIRECTION[target] if direction is None else direction
    end = default_end(sample, target) if end is None else end
    return grenander_estimate(sample, target, direction, end)


def grenander_ci(
    sample: CensoredSample,
    target: Target,
    x0: float,
    alpha: float = 0.05,
    direction: Direction | None = None,
    end: float | None = None,
) -> ConfidenceInterval:
    quantile = chernoff_quantile(1 - alpha / 2)
    fit = _fit(sample, target, direction, end)
    derivative = jump_derivative(fit.estimate, x0)
    center = fit.estimate(x0)
    survival = _survival_at(sample, target, x0)
    half = chernoff_half_width(sample.n, center, derivative, survival, quantile.q)
    logger.debug("grenander ci at x0=%.4g: value=%.5g derivative=%.5g half=%.5g", x0, center, derivative, half)
    return ConfidenceInterval(center, center - half, center + half, Method.GRENANDER_CHERNOFF, target, x0, alpha)


def _interior_margin(x0: float, b: float, support: tuple[float, float]) -> bool:
    return support[0] <= x0 - b and x0 + b <= support[1]


def sg_ci_undersmooth(
    sample: CensoredSample,
    target: Target,
    x0: float,
    scenario_c: float,
    alpha: float = 0.05,
    direction: Direction | None = None,
    end: float | None = None,
    kernel: KernelSpec | None = None,
) -> ConfidenceInterval:
    z = normal_quantile(alpha)
    kernel = kernel or triweight()
    n = sample.n
    b = scenario_c * n ** (-1 / 4)
    fit = _fit(sample, target, direction, end)
    # variance of the estimate at the bandwidth actually used
    context = SmoothedContext(fit.estimate, kernel, b, b, survival_cdf(sample, target), c=b * n ** 0.2)
    moments = plug_in_moments(context, x0, with_bias=False)
    center = smooth_estimate(fit.estimate, kernel, b, x0)
    half = normal_half_width(n, moments.sigma, z)
    return ConfidenceInterval(center, center - half, center + half, Method.SG_UNDERSMOOTH, target, x0, alpha)


def sg_ci_bias_estimate(
    sample: CensoredSample,
    target: Target,
    x0: float,
    scenario_c: float,
    alpha: float = 0.05,
    direction: Direction | None = None,
    end: float | None = None,
    kernel: KernelSpec | None = None,
    strict: bool = False,
    shift: bool = False,
) -> ConfidenceInterval:
    """Normal interval with an estimated bias term.

    As displayed the bias widens the interval symmetrically:
    center ± n^(-2/5)(sigma·z + mu). With ``shift`` the interval is instead
    centered at center - n^(-2/5)·mu with half-width n^(-2/5)·sigma·z.
    ``strict`` turns a second-derivative window overflowing the support into
    BandwidthMarginError; otherwise the window is cut at the support ends and
    the second derivative comes from a local quadratic fit.
    """
    z = normal_quantile(alpha)
    kernel = kernel or triweight()
    n = sample.n
    b = scenario_c * n ** (-5 / 17)
    b1 = scenario_c * n ** (-1 / 17)
    fit = _fit(sample, target, direction, end)
    support = (fit.estimate.start, fit.estimate.end)
    if strict and not _interior_margin(x0, b1, support):
        raise BandwidthMarginError(x0, b1, support)
    context = SmoothedContext(fit.estimate, kernel, b, b1, survival_cdf(sample, target), c=scenario_c)
    moments = plug_in_moments(context, x0)
    center = smooth_estimate(fit.estimate, kernel, b, x0)
    scale = n ** (-0.4)
    if shift:
        mid = center - scale * moments.mu
        half = normal_half_width(n, moments.sigma, z)
        return ConfidenceInterval(mid, mid - half, mid + half, Method.SG_BIAS_ESTIMATE, target, x0, alpha)
    # a negative sigma·z + mu names the same two end points in the other order
    half = normal_half_width(n, moments.sigma, z, moments.mu)
    return ConfidenceInterval(center, center - half, center + half, Method.SG_BIAS_ESTIMATE, target, x0, alpha)


def bias_window_clipped(x0: float, scenario_c: float, n: int, support: tuple[float, float]) -> bool:
    """Whether the second-derivative window of sg_ci_bias_estimate leaves the support."""
    return not _interior_margin(x0, scenario_c * n ** (-1 / 17), support)


METHODS: dict[Method, Callable[..., ConfidenceInterval]] = {
    Method.GRENANDER_CHERNOFF: lambda sample, target, x0, c, alpha, **kw: grenander_ci(sample, target, x0, alpha, **kw),
    Method.SG_UNDERSMOOTH: sg_ci_undersmooth,
    Method.SG_BIAS_ESTIMATE: sg_ci_bias_estimate,
}


def compute_interval(
    method: Method | str,
    sample: CensoredSample,
    target: Target,
    x0: float,
    scenario_c: float | None = None,
    alpha: float = 0.05,
    **options,
) -> ConfidenceInterval:
    """Dispatch on the method; smoothed methods need the bandwidth constant."""
    try:
        method = Method(method)
    except ValueError:
        raise ConfigurationError(f"unknown method {method!r}", {"known": [m.value for m in Method]})
    if method is not Method.GRENANDER_CHERNOFF and scenario_c is None:
        raise ConfigurationError(f"method {method.value} needs a bandwidth constant")
    return METHODS[method](sample, target, x0, scenario_c, alpha, **options)
