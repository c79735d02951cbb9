"""Kernel smoothing of piecewise-constant slope estimates.

The estimate is constant on each piece, so the convolution with the kernel
reduces to differences of the kernel antiderivatives at the piece ends. The
boundary-corrected kernel near an end point is phi(s)·k(u) ± psi(s)·u·k(u)
with s the distance to that end in bandwidth units.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .exceptions import ConfigurationError, DomainError, GrenanderError, SingularSystemError
from .isotonic import MonotoneEstimate

logger = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-9
SUPPORT_TOLERANCE = 1e-12

Array = Callable[[np.ndarray], np.ndarray]


class BoundaryMode(str, enum.Enum):
    NONE = "none"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric kernel density on [-1, 1] with its running integrals.

    antiderivative K(u), first_moment_integral M(u) and second_moment_integral
    Q(u) integrate k(v), v·k(v) and v²·k(v) from -1 to u.
    """

    name: str
    density: Array
    antiderivative: Array
    first_moment_integral: Array
    second_moment_integral: Array
    derivative: Array
    second_moment: float
    roughness: float


@dataclass(frozen=True)
class BoundaryCoefficients:
    s: float
    phi: float
    psi: float


@dataclass(frozen=True)
class Bandwidth:
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.b) and self.b > 0):
            raise ConfigurationError(f"bandwidth must be positive, got {self.b}")

    def check(self, support: tuple[float, float]) -> None:
        half = (support[1] - support[0]) / 2
        if self.b > half + SUPPORT_TOLERANCE:
            raise ConfigurationError(
                f"bandwidth {self.b:.6g} exceeds half the support length {half:.6g}",
                {"bandwidth": self.b, "support": list(support)},
            )


def _triweight_density(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1, 35 / 32 * (1 - u**2) ** 3, 0.0)


def _triweight_antiderivative(u):
    u = np.clip(u, -1.0, 1.0)
    return 0.5 + 35 / 32 * (u - u**3 + 3 * u**5 / 5 - u**7 / 7)


def _triweight_first_moment_integral(u):
    u = np.clip(u, -1.0, 1.0)
    return -35 / 256 * (1 - u**2) ** 4


def _triweight_second_moment_integral(u):
    u = np.clip(u, -1.0, 1.0)
    return 1 / 18 + 35 / 32 * (u**3 / 3 - 3 * u**5 / 5 + 3 * u**7 / 7 - u**9 / 9)


def _triweight_derivative(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1, -105 / 16 * u * (1 - u**2) ** 2, 0.0)


def triweight() -> KernelSpec:
    return KernelSpec(
        name="triweight",
        density=_triweight_density,
        antiderivative=_triweight_antiderivative,
        first_moment_integral=_triweight_first_moment_integral,
        second_moment_integral=_triweight_second_moment_integral,
        derivative=_triweight_derivative,
        second_moment=1 / 9,
        roughness=350 / 429,
    )


@dataclass(frozen=True)
class _RunningIntegral:
    """u ↦ ∫_{-1}^u v^power·k(v) dv by adaptive quadrature."""

    density: Callable[[float], float]
    power: int

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        flat = [
            integrate.quad(lambda v: v**self.power * self.density(v), -1.0, float(x), epsabs=QUADRATURE_TOLERANCE)[0]
            for x in u.ravel()
        ]
        out = np.asarray(flat).reshape(u.shape)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class _Bounded:
    fn: Callable[[float], float]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= 1, np.vectorize(self.fn, otypes=[float])(u), 0.0)


def quadrature_kernel(name: str, density: Callable[[float], float], derivative: Callable[[float], float]) -> KernelSpec:
    """Kernel whose running integrals come from adaptive quadrature.

    The kernel pickles, and so crosses into worker processes, when ``density``
    and ``derivative`` are module-level functions.
    """
    spec = KernelSpec(
        name=name,
        density=_Bounded(density),
        antiderivative=_RunningIntegral(density, 0),
        first_moment_integral=_RunningIntegral(density, 1),
        second_moment_integral=_RunningIntegral(density, 2),
        derivative=_Bounded(derivative),
        second_moment=integrate.quad(lambda v: v * v * density(v), -1, 1, epsabs=QUADRATURE_TOLERANCE)[0],
        roughness=integrate.quad(lambda v: density(v) ** 2, -1, 1, epsabs=QUADRATURE_TOLERANCE)[0],
    )
    if abs(spec.antiderivative(1.0) - 1.0) > 1e-8 or abs(spec.first_moment_integral(1.0)) > 1e-8:
        raise ConfigurationError(f"kernel {name!r} must be a symmetric probability density on [-1, 1]")
    return spec


def _biweight_density(u: float) -> float:
    return 15 / 16 * (1 - u * u) ** 2


def _biweight_derivative(u: float) -> float:
    return -15 / 4 * u * (1 - u * u)


def biweight() -> KernelSpec:
    return quadrature_kernel("biweight", _biweight_density, _biweight_derivative)


KERNELS = {"triweight": triweight, "biweight": biweight}


def get_kernel(name: str) -> KernelSpec:
    try:
        return KERNELS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown kernel {name!r}", {"known": sorted(KERNELS)})


def boundary_coefficients(k: KernelSpec, s: float) -> BoundaryCoefficients:
    """Solve phi·K(s) + psi·M(s) = 1, phi·M(s) + psi·Q(s) = 0."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"boundary ratio must lie in [0, 1], got {s}")
    big_k = float(k.antiderivative(s))
    big_m = float(k.first_moment_integral(s))
    big_q = float(k.second_moment_integral(s))
    det = big_k * big_q - big_m * big_m
    if abs(det) < 1e-14:
        raise SingularSystemError(f"boundary system is singular at s={s}", {"s": s, "determinant": det})
    return BoundaryCoefficients(s=s, phi=big_q / det, psi=-big_m / det)


def _resolve_support(est: MonotoneEstimate, support: tuple[float, float] | None) -> tuple[float, float]:
    if support is None:
        return est.start, est.end
    lower, upper = float(support[0]), float(support[1])
    if not upper > lower:
        raise DomainError(f"empty support [{lower:g}, {upper:g}]")
    if lower < est.start - SUPPORT_TOLERANCE or upper > est.end + SUPPORT_TOLERANCE:
        raise DomainError(
            f"estimate undefined on [{lower:g}, {upper:g}]; it covers [{est.start:g}, {est.end:g}]",
            {"support": [lower, upper], "estimate": [est.start, est.end]},
        )
    return lower, upper


def _window(est: MonotoneEstimate, b: float, x: float, support: tuple[float, float]):
    """Clipped kernel arguments (u_lo, u_hi) of every piece of the estimate."""
    lower, upper = support
    lo_u = max(-1.0, (x - upper) / b)
    hi_u = min(1.0, (x - lower) / b)
    left, right = est.breakpoints[:-1], est.breakpoints[1:]
    u_hi = np.clip((x - left) / b, lo_u, hi_u)
    u_lo = np.clip((x - right) / b, lo_u, hi_u)
    return u_lo, u_hi


def _boundary_branch(k: KernelSpec, b: float, x: float, support: tuple[float, float]) -> tuple[float, float, float]:
    """(phi, psi, sign) of the kernel used at x; the left branch wins ties."""
    lower, upper = support
    to_left, to_right = x - lower, upper - x
    if to_left <= b and to_left <= to_right:
        coef = boundary_coefficients(k, min(to_left / b, 1.0))
        return coef.phi, coef.psi, 1.0
    if to_right <= b:
        coef = boundary_coefficients(k, min(to_right / b, 1.0))
        return coef.phi, coef.psi, -1.0
    return 1.0, 0.0, 1.0


def smooth_estimate(
    est: MonotoneEstimate,
    k: KernelSpec,
    b: float,
    x: float,
    mode: BoundaryMode = BoundaryMode.NONE,
    support: tuple[float, float] | None = None,
) -> float:
    """∫ k_b(x-u) est(u) du over the support, exact for piecewise-constant est."""
    support = _resolve_support(est, support)
    bandwidth = Bandwidth(b)
    if not support[0] <= x <= support[1]:
        raise DomainError(f"x={x:g} outside support [{support[0]:g}, {support[1]:g}]", {"x": x})
    u_lo, u_hi = _window(est, b, x, support)
    mass = k.antiderivative(u_hi) - k.antiderivative(u_lo)
    if mode is BoundaryMode.NONE:
        return float(np.dot(est.slopes, mass))
    # the two boundary branches must not overlap
    bandwidth.check(support)
    phi, psi, sign = _boundary_branch(k, b, x, support)
    moment = k.first_moment_integral(u_hi) - k.first_moment_integral(u_lo)
    return float(np.dot(est.slopes, phi * mass + sign * psi * moment))


def smooth_curve(
    est: MonotoneEstimate,
    k: KernelSpec,
    b: float,
    grid: Sequence[float],
    mode: BoundaryMode = BoundaryMode.NONE,
    support: tuple[float, float] | None = None,
) -> list[tuple[float, float]]:
    points = []
    for index, x in enumerate(grid):
        try:
            points.append((float(x), smooth_estimate(est, k, b, float(x), mode, support)))
        except GrenanderError as exc:
            exc.context["grid_index"] = index
            raise
    return points


def smooth_second_derivative(
    est: MonotoneEstimate,
    k: KernelSpec,
    b: float,
    x: float,
    support: tuple[float, float] | None = None,
) -> float:
    """Second derivative in x of the standard smoothed estimate.

    Equals sum_j slope_j·[k'((x-a_j)/b) - k'((x-c_j)/b)]/b² over pieces
    [a_j, c_j]. The window [x-b, x+b] must lie inside the support.
    """
    support = _resolve_support(est, support)
    Bandwidth(b)
    lower, upper = support
    if not lower <= x <= upper:
        raise DomainError(f"x={x:g} outside support [{lower:g}, {upper:g}]", {"x": x})
    if x - b < lower or x + b > upper:
        raise DomainError(
            f"x={x:g} lies within bandwidth {b:.6g} of a support end point",
            {"x": x, "bandwidth": b, "support": [lower, upper]},
        )
    u_lo, u_hi = _window(est, b, x, support)
    return float(np.dot(est.slopes, k.derivative(u_hi) - k.derivative(u_lo)) / b**2)


def local_second_derivative(
    est: MonotoneEstimate,
    k: KernelSpec,
    b: float,
    x: float,
    support: tuple[float, float] | None = None,
) -> float:
    """Second derivative at x of a local quadratic fit to est with kernel weights.

    Minimizes ∫ k(u)·(est(x - b·u) - beta0 - beta1·u - beta2·u²)² du over the
    part of [-1, 1] that stays inside the support and returns 2·beta2/b².
    A window cut at a support end leaves the fit unbiased for quadratic est,
    so the estimate stays usable when b exceeds the distance to either end.
    """
    support = _resolve_support(est, support)
    Bandwidth(b)
    lower, upper = support
    if not lower <= x <= upper:
        raise DomainError(f"x={x:g} outside support [{lower:g}, {upper:g}]", {"x": x})
    lo_u, hi_u = max(-1.0, (x - upper) / b), min(1.0, (x - lower) / b)
    u_lo, u_hi = _window(est, b, x, support)
    running = (k.antiderivative, k.first_moment_integral, k.second_moment_integral)
    rhs = np.array([np.dot(est.slopes, r(u_hi) - r(u_lo)) for r in running])
    moments = [float(r(hi_u) - r(lo_u)) for r in running]
    for power in (3, 4):
        value, _ = integrate.quad(
            lambda v: v**power * float(k.density(v)), lo_u, hi_u, epsabs=QUADRATURE_TOLERANCE
        )
        moments.append(value)
    gram = np.array([moments[i : i + 3] for i in range(3)])
    if np.linalg.cond(gram) > 1e12:
        raise SingularSystemError(
            f"local quadratic fit is singular at x={x:g}", {"x": x, "bandwidth": b, "support": [lower, upper]}
        )
    beta = np.linalg.solve(gram, rhs)
    logger.debug("local quadratic at x=%.4g over u in [%.4g, %.4g]: beta=%s", x, lo_u, hi_u, beta)
    return float(2 * beta[2] / b**2)
