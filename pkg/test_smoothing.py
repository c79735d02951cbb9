import pickle

import numpy as np
import pytest
from scipy import integrate

from grenander.exceptions import ConfigurationError, DomainError, GrenanderError
from grenander.isotonic import MonotoneEstimate
from grenander.models import Direction
from grenander.smoothing import (
    BoundaryMode,
    biweight,
    boundary_coefficients,
    get_kernel,
    local_second_derivative,
    quadrature_kernel,
    smooth_curve,
    smooth_estimate,
    smooth_second_derivative,
)


def random_estimate(rng, pieces=8, upper=4.0):
    inner = np.sort(rng.uniform(0, upper, size=pieces - 1))
    breakpoints = np.concatenate(([0.0], inner, [upper]))
    return MonotoneEstimate(breakpoints, np.sort(rng.uniform(0, 3, size=pieces)), Direction.INCREASING)


def staircase(fn, upper=4.0, step=1e-3):
    """Piecewise-constant version of fn with pieces of width ``step``."""
    breakpoints = np.arange(0.0, upper + step / 2, step)
    mids = (breakpoints[:-1] + breakpoints[1:]) / 2
    return MonotoneEstimate(breakpoints, fn(mids), Direction.INCREASING)


def test_triweight_moments(kernel):
    assert kernel.second_moment == pytest.approx(1 / 9)
    assert kernel.roughness == pytest.approx(350 / 429)
    assert integrate.quad(lambda u: u * u * kernel.density(u), -1, 1)[0] == pytest.approx(1 / 9, abs=1e-12)
    assert integrate.quad(lambda u: kernel.density(u) ** 2, -1, 1)[0] == pytest.approx(350 / 429, abs=1e-12)


def test_triweight_running_integrals(kernel):
    assert kernel.antiderivative(0.0) == pytest.approx(0.5)
    assert kernel.antiderivative(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert kernel.antiderivative(1.0) == pytest.approx(1.0)
    assert kernel.first_moment_integral(1.0) == pytest.approx(0.0, abs=1e-15)
    assert kernel.second_moment_integral(1.0) == pytest.approx(1 / 9)
    for u in (-0.7, 0.0, 0.35, 0.9):
        k = kernel.density
        assert kernel.antiderivative(u) == pytest.approx(integrate.quad(k, -1, u)[0], abs=1e-12)
        assert kernel.first_moment_integral(u) == pytest.approx(integrate.quad(lambda v: v * k(v), -1, u)[0], abs=1e-12)
        assert kernel.second_moment_integral(u) == pytest.approx(
            integrate.quad(lambda v: v * v * k(v), -1, u)[0], abs=1e-12
        )


def test_triweight_derivative_matches_difference_quotient(kernel):
    for u in (-0.6, 0.1, 0.8):
        h = 1e-6
        numeric = (kernel.density(u + h) - kernel.density(u - h)) / (2 * h)
        assert kernel.derivative(u) == pytest.approx(numeric, abs=1e-6)


def test_biweight_by_quadrature():
    k = biweight()
    assert k.second_moment == pytest.approx(1 / 7, abs=1e-9)
    assert k.roughness == pytest.approx(5 / 7, abs=1e-9)
    assert k.antiderivative(0.0) == pytest.approx(0.5, abs=1e-9)


def test_quadrature_kernel_must_be_a_density():
    with pytest.raises(ConfigurationError):
        quadrature_kernel("double", lambda u: 2 * 0.75 * (1 - u * u), lambda u: -3 * u)


def test_unknown_kernel():
    with pytest.raises(ConfigurationError):
        get_kernel("gaussian")


def test_boundary_coefficients_at_one(kernel):
    coef = boundary_coefficients(kernel, 1.0)
    assert coef.phi == pytest.approx(1.0)
    assert coef.psi == pytest.approx(0.0, abs=1e-14)


def test_boundary_identities_on_grid(kernel):
    for s in np.round(np.arange(0.0, 1.0001, 0.01), 2):
        c = boundary_coefficients(kernel, s)
        big_k, big_m, big_q = (float(f(s)) for f in (kernel.antiderivative, kernel.first_moment_integral, kernel.second_moment_integral))
        assert c.phi * big_k + c.psi * big_m == pytest.approx(1.0, abs=1e-10)
        assert c.phi * big_m + c.psi * big_q == pytest.approx(0.0, abs=1e-10)


def test_boundary_kernel_integrates_to_one(kernel):
    for s in (0.0, 0.3, 0.75):
        c = boundary_coefficients(kernel, s)
        bounded = lambda u: (c.phi + c.psi * u) * kernel.density(u)  # noqa: E731
        assert integrate.quad(bounded, -1, s)[0] == pytest.approx(1.0, abs=1e-10)
        assert integrate.quad(lambda u: u * bounded(u), -1, s)[0] == pytest.approx(0.0, abs=1e-10)


def test_boundary_coefficients_match_independent_solve(kernel):
    k = kernel.density
    s = 0.5
    moments = [integrate.quad(lambda v, p=p: v**p * k(v), -1, s)[0] for p in range(3)]
    phi, psi = np.linalg.solve([[moments[0], moments[1]], [moments[1], moments[2]]], [1.0, 0.0])
    coef = boundary_coefficients(kernel, s)
    assert coef.phi == pytest.approx(phi, abs=1e-10)
    assert coef.psi == pytest.approx(psi, abs=1e-10)


def test_boundary_ratio_outside_unit_interval(kernel):
    with pytest.raises(DomainError):
        boundary_coefficients(kernel, 1.5)


def test_constant_estimate_is_reproduced(kernel):
    est = MonotoneEstimate([0.0, 10.0], [2.5], Direction.INCREASING)
    assert smooth_estimate(est, kernel, 1.0, 5.0) == pytest.approx(2.5)
    for x in (0.0, 0.4, 9.7, 10.0):
        assert smooth_estimate(est, kernel, 1.0, x, BoundaryMode.LINEAR) == pytest.approx(2.5, abs=1e-12)


def test_standard_mode_loses_mass_at_the_boundary(kernel):
    est = MonotoneEstimate([0.0, 10.0], [2.5], Direction.INCREASING)
    assert smooth_estimate(est, kernel, 1.0, 0.0) == pytest.approx(1.25)


def test_linear_pattern(kernel):
    est = staircase(lambda u: u)
    assert smooth_estimate(est, kernel, 0.5, 0.2, BoundaryMode.LINEAR) == pytest.approx(0.2, abs=1e-6)
    assert smooth_estimate(est, kernel, 0.5, 2.0, BoundaryMode.LINEAR) == pytest.approx(2.0, abs=1e-6)
    assert smooth_estimate(est, kernel, 0.5, 2.0) == pytest.approx(2.0, abs=1e-6)
    # a quadratic picks up b²·∫u²k
    square = staircase(lambda u: u * u)
    expected = 4.0 + 0.25 * kernel.second_moment
    assert smooth_estimate(square, kernel, 0.5, 2.0) == pytest.approx(expected, abs=1e-6)


def _quadrature(est, kernel, b, x, lower, upper):
    lo, hi = max(lower, x - b), min(upper, x + b)
    inner = [t for t in est.breakpoints if lo < t < hi]
    value, _ = integrate.quad(
        lambda u: kernel.density((x - u) / b) / b * est(u), lo, hi, points=inner or None, limit=200, epsabs=1e-12
    )
    return value


def test_exact_convolution_matches_quadrature(kernel, rng):
    for _ in range(200):
        est = random_estimate(rng)
        b = rng.uniform(0.2, 1.5)
        x = rng.uniform(0.0, 4.0)
        assert smooth_estimate(est, kernel, b, x) == pytest.approx(_quadrature(est, kernel, b, x, 0.0, 4.0), abs=1e-8)


def test_corrected_estimate_matches_quadrature_near_zero(kernel, rng):
    est = random_estimate(rng)
    b, x = 1.0, 0.3
    coef = boundary_coefficients(kernel, x / b)
    lo, hi = 0.0, x + b
    inner = [t for t in est.breakpoints if lo < t < hi]
    expected, _ = integrate.quad(
        lambda u: (coef.phi + coef.psi * (x - u) / b) * kernel.density((x - u) / b) / b * est(u),
        lo,
        hi,
        points=inner or None,
        limit=200,
    )
    assert smooth_estimate(est, kernel, b, x, BoundaryMode.LINEAR) == pytest.approx(expected, abs=1e-8)


def test_corrected_equals_standard_in_the_interior(kernel, rng):
    est = random_estimate(rng)
    for x in np.linspace(1.01, 2.99, 20):
        assert smooth_estimate(est, kernel, 1.0, x, BoundaryMode.LINEAR) == smooth_estimate(est, kernel, 1.0, x)


def test_standard_estimate_is_monotone_in_the_interior(kernel, rng):
    for _ in range(10):
        est = random_estimate(rng)
        values = [smooth_estimate(est, kernel, 0.8, x) for x in np.linspace(0.8, 3.2, 100)]
        assert np.all(np.diff(values) >= -1e-12)


def test_x_outside_support(kernel):
    est = MonotoneEstimate([0.0, 1.0], [1.0], Direction.INCREASING)
    with pytest.raises(DomainError):
        smooth_estimate(est, kernel, 0.2, 1.5)
    with pytest.raises(DomainError):
        smooth_estimate(est, kernel, 0.2, 0.5, support=(0.0, 2.0))


def test_corrected_bandwidth_at_most_half_the_support(kernel):
    est = MonotoneEstimate([0.0, 1.0], [1.0], Direction.INCREASING)
    with pytest.raises(ConfigurationError):
        smooth_estimate(est, kernel, 0.6, 0.5, BoundaryMode.LINEAR)


def test_smooth_curve(kernel, rng):
    est = random_estimate(rng)
    assert smooth_curve(est, kernel, 0.5, [1.3]) == [(1.3, smooth_estimate(est, kernel, 0.5, 1.3))]
    flat = MonotoneEstimate([0.0, 4.0], [0.7], Direction.INCREASING)
    assert all(v == pytest.approx(0.7) for _, v in smooth_curve(flat, kernel, 0.5, np.linspace(0.5, 3.5, 7)))


def test_smooth_curve_reports_grid_index(kernel):
    est = MonotoneEstimate([0.0, 1.0], [1.0], Direction.INCREASING)
    with pytest.raises(GrenanderError) as err:
        smooth_curve(est, kernel, 0.2, [0.2, 0.4, 3.0])
    assert err.value.context["grid_index"] == 2


def test_second_derivative_of_constant_is_zero(kernel):
    est = MonotoneEstimate([0.0, 4.0], [1.3], Direction.INCREASING)
    assert smooth_second_derivative(est, kernel, 1.0, 2.0) == pytest.approx(0.0, abs=1e-12)


def test_second_derivative_of_linear_pattern_is_zero(kernel):
    est = staircase(lambda u: u)
    assert smooth_second_derivative(est, kernel, 0.5, 2.0) == pytest.approx(0.0, abs=1e-6)


def test_second_derivative_of_quadratic_pattern(kernel):
    est = staircase(lambda u: 3 * u * u)
    assert smooth_second_derivative(est, kernel, 0.5, 2.0) == pytest.approx(6.0, abs=1e-3)


def test_second_derivative_matches_difference_quotient(kernel, rng):
    for _ in range(20):
        est = random_estimate(rng)
        x, b, h = rng.uniform(1.6, 2.4), 1.2, 1e-3
        numeric = (
            smooth_estimate(est, kernel, b, x + h) - 2 * smooth_estimate(est, kernel, b, x) + smooth_estimate(est, kernel, b, x - h)
        ) / h**2
        assert smooth_second_derivative(est, kernel, b, x) == pytest.approx(numeric, rel=1e-3, abs=1e-4)


def test_second_derivative_needs_an_interior_window(kernel):
    est = MonotoneEstimate([0.0, 4.0], [1.3], Direction.INCREASING)
    with pytest.raises(DomainError):
        smooth_second_derivative(est, kernel, 1.0, 0.5)


def test_local_fit_of_a_constant_is_flat_at_the_ends(kernel):
    est = MonotoneEstimate([0.0, 4.0], [1.3], Direction.INCREASING)
    for x in (0.0, 0.5, 3.9):
        assert local_second_derivative(est, kernel, 1.0, x) == pytest.approx(0.0, abs=1e-9)


def test_local_fit_ignores_a_linear_trend_cut_by_the_origin(kernel):
    est = staircase(lambda u: u)
    assert local_second_derivative(est, kernel, 1.0, 0.3) == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("x, b", [(2.0, 0.5), (0.3, 1.0), (0.5, 0.83), (3.8, 1.0)])
def test_local_fit_recovers_a_quadratic_near_and_away_from_the_ends(kernel, x, b):
    est = staircase(lambda u: 3 * u * u)
    assert local_second_derivative(est, kernel, b, x) == pytest.approx(6.0, abs=1e-2)


def test_local_fit_agrees_with_the_smoothed_derivative_inside(kernel):
    est = staircase(lambda u: u**3)
    assert local_second_derivative(est, kernel, 0.5, 2.0) == pytest.approx(
        smooth_second_derivative(est, kernel, 0.5, 2.0), abs=1e-2
    )


def test_local_fit_works_for_quadrature_kernels():
    est = staircase(lambda u: 3 * u * u, step=1e-2)
    assert local_second_derivative(est, biweight(), 1.0, 0.2) == pytest.approx(6.0, abs=0.05)


def test_kernels_cross_process_boundaries(kernel):
    for spec in (kernel, biweight()):
        copy = pickle.loads(pickle.dumps(spec))
        assert copy.name == spec.name
        assert float(copy.antiderivative(0.3)) == pytest.approx(float(spec.antiderivative(0.3)))
