"""Asymptotic bias, variance and MSE-optimal bandwidth constants.

With b = c·n^(-1/5) the smoothed estimator satisfies
n^(2/5)(estimate - truth) -> N(mu, sigma2), where

    mu     = c²/2 · g''(x) · ∫u²k(u)du
    sigma2 = g(x) · ∫k²(u)du / (c · S(x))

g is the hazard (S = 1 - H) or the density (S = 1 - G).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .exceptions import ConfigurationError, NoFiniteOptimumError, SurvivalZeroError
from .models import NamedScenario, Target
from .smoothing import KernelSpec, local_second_derivative, smooth_estimate, smooth_second_derivative
from .isotonic import MonotoneEstimate
from .step_estimators import StepFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AsymptoticMoments:
    mu: float
    sigma2: float
    c: float

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ConfigurationError(f"asymptotic variance must be non-negative, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def _check(survival: float, c: float | None = None) -> None:
    if not survival > 0:
        raise ConfigurationError(f"survival factor must be positive, got {survival}")
    if c is not None and not c > 0:
        raise ConfigurationError(f"bandwidth constant must be positive, got {c}")


def _moments(value: float, second: float, survival: float, c: float, k: KernelSpec) -> AsymptoticMoments:
    _check(survival, c)
    mu = 0.5 * c * c * second * k.second_moment
    sigma2 = value * k.roughness / (c * survival)
    return AsymptoticMoments(mu=mu, sigma2=sigma2, c=c)


def hazard_moments(lambda_x: float, lambda2_x: float, one_minus_H_x: float, c: float, k: KernelSpec) -> AsymptoticMoments:
    return _moments(lambda_x, lambda2_x, one_minus_H_x, c, k)


def density_moments(f_x: float, f2_x: float, one_minus_G_x: float, c: float, k: KernelSpec) -> AsymptoticMoments:
    return _moments(f_x, f2_x, one_minus_G_x, c, k)


def amse(value: float, second: float, survival: float, c: float, k: KernelSpec) -> float:
    """mu² + sigma2 as a function of the bandwidth constant."""
    moments = _moments(value, second, survival, c, k)
    return moments.mu**2 + moments.sigma2


def _c_opt(value: float, second: float, survival: float, k: KernelSpec) -> float:
    _check(survival)
    if second == 0:
        raise NoFiniteOptimumError("second derivative is zero: the bias vanishes and no finite optimum exists")
    if not value > 0:
        raise ConfigurationError(f"estimated function must be positive, got {value}")
    return (value * k.roughness) ** 0.2 * (survival * second**2 * k.second_moment**2) ** -0.2


def c_opt_hazard(lambda_x: float, lambda2_x: float, one_minus_H_x: float, k: KernelSpec) -> float:
    return _c_opt(lambda_x, lambda2_x, one_minus_H_x, k)


def c_opt_density(f_x: float, f2_x: float, one_minus_G_x: float, k: KernelSpec) -> float:
    return _c_opt(f_x, f2_x, one_minus_G_x, k)


def oracle_survival(scenario: NamedScenario, x: float) -> float:
    """1 - H(x) for hazards, 1 - G(x) for densities, from the true laws."""
    spec = scenario.spec
    if scenario.target is Target.HAZARD:
        return float(spec.follow_up_survival(x))
    return float(spec.censor_law.sf(x))


def oracle_moments(scenario: NamedScenario, x: float, c: float, k: KernelSpec) -> AsymptoticMoments:
    return _moments(float(scenario.truth(x)), scenario.truth_second_derivative(x), oracle_survival(scenario, x), c, k)


def oracle_c_opt(scenario: NamedScenario, x: float, k: KernelSpec) -> float:
    return _c_opt(float(scenario.truth(x)), scenario.truth_second_derivative(x), oracle_survival(scenario, x), k)


@dataclass(frozen=True)
class SmoothedContext:
    """Everything the plug-in moments need at one point.

    ``survival_cdf`` is H_n for hazards and the censoring estimate G_n for
    densities; ``second_bandwidth`` is the bandwidth of the second-derivative
    estimate. When its window overflows the support the second derivative
    comes from a local quadratic fit instead of the smoothed estimate.
    """

    estimate: MonotoneEstimate
    kernel: KernelSpec
    bandwidth: float
    second_bandwidth: float
    survival_cdf: StepFunction
    c: float
    support: tuple[float, float] | None = None


def _second_derivative(context: SmoothedContext, x: float) -> float:
    lower, upper = context.support or (context.estimate.start, context.estimate.end)
    b1 = context.second_bandwidth
    if lower <= x - b1 and x + b1 <= upper:
        return smooth_second_derivative(context.estimate, context.kernel, b1, x, support=context.support)
    logger.debug("second-derivative window %.4g at x=%.4g leaves [%.4g, %.4g]; local fit", b1, x, lower, upper)
    return local_second_derivative(context.estimate, context.kernel, b1, x, support=context.support)


def plug_in_moments(context: SmoothedContext, x: float, with_bias: bool = True) -> AsymptoticMoments:
    survival = 1.0 - context.survival_cdf(x)
    if survival <= 0:
        raise SurvivalZeroError(x)
    value = smooth_estimate(context.estimate, context.kernel, context.bandwidth, x, support=context.support)
    second = 0.0
    if with_bias:
        second = _second_derivative(context, x)
    logger.debug("plug-in at x=%.4g: value=%.5g second=%.5g survival=%.4g c=%.4g", x, value, second, survival, context.c)
    return _moments(max(value, 0.0), second, survival, context.c, context.kernel)
