import numpy as np
import pytest

from grenander import inference
from grenander.asymptotics import AsymptoticMoments
from grenander.exceptions import (
    BandwidthMarginError,
    ConfigurationError,
    DerivativeUndefinedError,
    SurvivalZeroError,
)
from grenander.inference import (
    ConfidenceInterval,
    Method,
    bias_window_clipped,
    chernoff_half_width,
    chernoff_quantile,
    compute_interval,
    grenander_ci,
    jump_derivative,
    normal_half_width,
    normal_quantile,
    sg_ci_bias_estimate,
    sg_ci_undersmooth,
)
from grenander.isotonic import MonotoneEstimate
from grenander.models import CensoredSample, Direction, Target

STAIRS = MonotoneEstimate([0.0, 1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 4.0, 5.0], Direction.INCREASING)


def test_jump_derivative_by_hand():
    assert jump_derivative(STAIRS, 2.5) == pytest.approx(2.0)
    assert jump_derivative(STAIRS, 2.0) == pytest.approx(1.0)


@pytest.mark.parametrize("x0", [0.0, 0.5, 1.0, 3.5, 4.0, 5.0])
def test_jump_derivative_undefined_at_the_ends(x0):
    with pytest.raises(DerivativeUndefinedError, match="derivative undefined"):
        jump_derivative(STAIRS, x0)


def test_chernoff_half_width_arithmetic():
    assert chernoff_half_width(1, 1.0, 1.0, 1.0, 0.998181) == pytest.approx(4 ** (1 / 3) * 0.998181)
    assert chernoff_half_width(8, 1.0, 1.0, 1.0, 1.0) == pytest.approx(chernoff_half_width(1, 1.0, 1.0, 1.0, 1.0) / 2)
    # a decreasing target has a negative derivative
    assert chernoff_half_width(8, 1.0, -1.0, 1.0, 1.0) == chernoff_half_width(8, 1.0, 1.0, 1.0, 1.0)


def test_normal_half_width_scales_as_n_to_minus_two_fifths():
    assert normal_half_width(32, 1.0, 1.0) == pytest.approx(0.25)
    assert normal_half_width(32, 1.0, 1.0, mu=-3.0) == pytest.approx(0.5)


def test_quantiles():
    assert normal_quantile(0.05) == pytest.approx(1.959964, abs=1e-6)
    assert chernoff_quantile(0.975).q == 0.998181
    with pytest.raises(ConfigurationError):
        chernoff_quantile(0.95)
    with pytest.raises(ConfigurationError):
        normal_quantile(1.5)


def test_interval_must_contain_its_center():
    with pytest.raises(ConfigurationError):
        ConfidenceInterval(1.0, 1.5, 2.0, Method.SG_UNDERSMOOTH, Target.HAZARD, 0.5, 0.05)


def test_interval_to_dict():
    ci = ConfidenceInterval(1.0, 0.5, 1.5, Method.SG_BIAS_ESTIMATE, Target.DENSITY, 1.0, 0.05)
    row = ci.to_dict()
    assert row["method"] == "sg-bias"
    assert row["target"] == "density"
    assert ci.length == 1.0
    assert ci.contains(1.5) and not ci.contains(1.6)


def test_grenander_interval_other_levels_are_not_tabulated(weibull_sample):
    with pytest.raises(ConfigurationError):
        grenander_ci(weibull_sample, Target.HAZARD, 0.5, alpha=0.1)


def _assert_symmetric(ci):
    assert ci.center - ci.lower == pytest.approx(ci.upper - ci.center, rel=1e-12)
    assert ci.lower < ci.center < ci.upper


def test_intervals_on_the_hazard_sample(weibull_sample):
    for ci in (
        grenander_ci(weibull_sample, Target.HAZARD, 0.5),
        sg_ci_undersmooth(weibull_sample, Target.HAZARD, 0.5, 1.2),
        sg_ci_bias_estimate(weibull_sample, Target.HAZARD, 0.5, 1.2),
    ):
        _assert_symmetric(ci)
        assert ci.x0 == 0.5
        assert ci.target is Target.HAZARD


def test_intervals_on_the_density_sample(truncexp_sample):
    for method in Method:
        ci = compute_interval(method, truncexp_sample, Target.DENSITY, 1.0, scenario_c=5.14)
        _assert_symmetric(ci)
        assert ci.method is method


def test_grenander_interval_at_the_origin(weibull_sample):
    with pytest.raises(DerivativeUndefinedError):
        grenander_ci(weibull_sample, Target.HAZARD, 0.0)


def test_survival_zero_at_the_last_observation():
    sample = CensoredSample.from_arrays([1.0, 2.0, 3.0, 4.0, 5.0], [True, True, True, True, True])
    with pytest.raises(SurvivalZeroError):
        sg_ci_undersmooth(sample, Target.HAZARD, 5.0, 1.0, end=5.0)


@pytest.fixture
def fixed_moments(monkeypatch):
    """Replace the plug-in moments by fixed values."""

    def install(mu, sigma2):
        monkeypatch.setattr(
            inference, "plug_in_moments", lambda context, x, with_bias=True: AsymptoticMoments(mu, sigma2, context.c)
        )

    return install


def test_zero_variance_gives_a_degenerate_interval(weibull_sample, fixed_moments):
    fixed_moments(0.0, 0.0)
    ci = sg_ci_undersmooth(weibull_sample, Target.HAZARD, 0.5, 1.2)
    assert ci.lower == ci.center == ci.upper


def test_zero_bias_matches_the_undersmoothed_width(weibull_sample, fixed_moments):
    fixed_moments(0.0, 1.0)
    under = sg_ci_undersmooth(weibull_sample, Target.HAZARD, 0.5, 1.2)
    bias = sg_ci_bias_estimate(weibull_sample, Target.HAZARD, 0.5, 1.2)
    assert bias.length == pytest.approx(under.length)
    assert under.length == pytest.approx(2 * 500 ** (-0.4) * normal_quantile(0.05))


def test_bias_widens_symmetrically_or_shifts(weibull_sample, fixed_moments):
    fixed_moments(2.0, 1.0)
    z, scale = normal_quantile(0.05), 500 ** (-0.4)
    wide = sg_ci_bias_estimate(weibull_sample, Target.HAZARD, 0.5, 1.2)
    assert wide.upper - wide.center == pytest.approx(scale * (z + 2.0))
    shifted = sg_ci_bias_estimate(weibull_sample, Target.HAZARD, 0.5, 1.2, shift=True)
    assert shifted.center == pytest.approx(wide.center - 2.0 * scale)
    assert shifted.length == pytest.approx(2 * scale * z)


def test_strict_bias_window(weibull_sample):
    # b1 = 1.2·500^(-1/17) ≈ 0.83 reaches past the origin from x0 = 0.5
    assert bias_window_clipped(0.5, 1.2, 500, (0.0, 1.0))
    assert not bias_window_clipped(0.5, 1.2, 500, (-1.0, 2.0))
    with pytest.raises(BandwidthMarginError) as err:
        sg_ci_bias_estimate(weibull_sample, Target.HAZARD, 0.5, 1.2, strict=True)
    assert err.value.context["bandwidth"] == pytest.approx(0.832, abs=1e-3)


def test_compute_interval_dispatch(weibull_sample):
    ci = compute_interval("grenander", weibull_sample, Target.HAZARD, 0.5)
    assert ci.method is Method.GRENANDER_CHERNOFF
    with pytest.raises(ConfigurationError, match="unknown method"):
        compute_interval("bootstrap", weibull_sample, Target.HAZARD, 0.5)
    with pytest.raises(ConfigurationError, match="bandwidth constant"):
        compute_interval(Method.SG_UNDERSMOOTH, weibull_sample, Target.HAZARD, 0.5)


def test_compute_interval_passes_options(weibull_sample):
    with pytest.raises(BandwidthMarginError):
        compute_interval("sg-bias", weibull_sample, Target.HAZARD, 0.5, scenario_c=1.2, strict=True)


def test_interval_centers_track_the_truth(weibull, weibull_sample):
    truth = float(weibull.truth(0.5))
    for method in Method:
        ci = compute_interval(method, weibull_sample, Target.HAZARD, 0.5, scenario_c=1.2)
        assert np.isfinite(ci.length)
        assert abs(ci.center - truth) < 0.5
