import math

import numpy as np
import pytest

from di_poisson.core.analysis import (
    TYPE1_REFERENCE,
    achievability_radius,
    fourth_raw_moment_polynomial,
    bounds_report,
    clamp_probability,
    fourth_moment_bound,
    log2_packing_count_lower,
    log2_packing_count_upper,
    log2_sphere_volume,
    pairwise_e0_bound,
    poisson_fourth_central_moment,
    poisson_fourth_raw_moment,
    rate_bracket_onset,
    rate_lower_bound,
    rate_lower_bound_exact,
    rate_upper_bound,
    rate_upper_bound_exact,
    reference_curve,
    type1_bound,
    type2_bounds,
    volume_ratio_rate,
    volume_ratio_rate_exact,
)
from di_poisson.core.channel import ChannelParams
from di_poisson.core.codebook import derive_params
from di_poisson.core.domain import ParameterError

MU_GRID = [0.01, 0.2, 1.0, 10.2, 100.0]
CHANNEL = ChannelParams(rho=0.01, lam=0.2)


def code(n: int):
    return derive_params(n, 0.1, 1000.0, 1000.0, 1e5, 0.99, 1.0 / 3.0, CHANNEL.rho, size=1)


def test_fourth_moment_at_zero():
    assert poisson_fourth_central_moment(0.0) == 0.0
    assert fourth_moment_bound(0.0) == 0.0


def test_fourth_moment_at_one():
    assert poisson_fourth_central_moment(1.0) == pytest.approx(4.0, abs=1e-9)
    assert fourth_moment_bound(1.0) == 28.0


@pytest.mark.parametrize("mu", MU_GRID)
def test_fourth_moment_below_polynomial_bound(mu):
    assert poisson_fourth_central_moment(mu) <= fourth_moment_bound(mu)


@pytest.mark.parametrize("mu", MU_GRID)
def test_fourth_central_moment_closed_form(mu):
    assert poisson_fourth_central_moment(mu) == pytest.approx(3 * mu**2 + mu, rel=1e-8)


@pytest.mark.parametrize("mu", MU_GRID)
def test_quartic_polynomial_is_the_raw_moment(mu):
    assert poisson_fourth_raw_moment(mu) == pytest.approx(
        fourth_raw_moment_polynomial(mu), rel=1e-8
    )


def test_quartic_polynomial_is_not_the_central_moment():
    assert fourth_raw_moment_polynomial(1.0) == 15.0
    assert poisson_fourth_central_moment(1.0) != pytest.approx(15.0)


def test_negative_mean_rejected():
    with pytest.raises(ParameterError):
        poisson_fourth_central_moment(-1.0)


def test_type1_bound_reference_value():
    assert fourth_moment_bound(10.2) == pytest.approx(83998, abs=1)
    assert type1_bound(CHANNEL, code(19)) == pytest.approx(409.7, rel=1e-3)


def test_bounds_decay_with_exponent_b():
    n_values = np.logspace(2, 6, 9).astype(int)
    series = {
        "type1": [type1_bound(CHANNEL, code(n)) for n in n_values],
        "e0": [type2_bounds(CHANNEL, code(n))[0] for n in n_values],
        "e1": [type2_bounds(CHANNEL, code(n))[1] for n in n_values],
    }

    for name, values in series.items():
        assert all(np.diff(values) < 0), name
        slope = np.polyfit(np.log(n_values), np.log(values), 1)[0]
        assert slope == pytest.approx(-0.99, abs=0.01), name


def test_type1_bound_vanishes_with_the_mean():
    channel = ChannelParams(rho=0.01, lam=1e-12)
    values = [
        type1_bound(
            channel,
            derive_params(19, 0.1, p, p, 1e5, 0.99, 1.0 / 3.0, channel.rho, a_dist=1e-20, size=1),
        )
        for p in (1e-2, 1e-4, 1e-6)
    ]

    assert all(np.diff(values) < 0)
    assert values[-1] < 1e-6


def test_e1_to_type1_ratio():
    params = code(19)
    _, e1 = type2_bounds(CHANNEL, params)

    ratio = e1 / type1_bound(CHANNEL, params)

    assert ratio == pytest.approx(params.c**2 / (4 * (params.c - 2) ** 2))


def test_type2_bounds_positive():
    e0, e1 = type2_bounds(CHANNEL, code(19))

    assert e0 > 0 and e1 > 0
    assert math.isfinite(e0) and math.isfinite(e1)


def test_pairwise_e0_bound_at_the_cube_diagonal():
    params = code(19)
    e0, _ = type2_bounds(CHANNEL, params)

    # ||u_i - u_j||^2 = n A^2 is a quarter of the 4 n A^2 used by the worst case
    value = pairwise_e0_bound(CHANNEL, params, np.zeros(19), np.full(19, params.amplitude))

    assert value == pytest.approx(e0 / 4)
    assert pairwise_e0_bound(CHANNEL, params, np.ones(19), np.ones(19)) == 0.0


def test_sphere_volume():
    assert log2_sphere_volume(2, 1.0) == pytest.approx(math.log2(math.pi))
    assert log2_sphere_volume(3, 1.0) == pytest.approx(math.log2(4 * math.pi / 3))


def test_sphere_volume_scales_with_radius():
    for n in (1, 10, 1000):
        assert log2_sphere_volume(n, 2.0 * 3.7) - log2_sphere_volume(n, 3.7) == pytest.approx(n)


def test_sphere_volume_vanishes_with_growing_radius():
    values = [log2_sphere_volume(n, n**0.25) for n in (10**3, 10**4, 10**5, 10**6)]

    assert all(np.diff(values) < 0)
    assert values[-1] < -1e6


def test_sphere_volume_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        log2_sphere_volume(0, 1.0)
    with pytest.raises(ParameterError):
        log2_sphere_volume(3, 0.0)


def test_packing_count_in_one_dimension():
    assert log2_packing_count_lower(1, 2.0 * 5.0, 5.0) == pytest.approx(-1.0)


def test_packing_count_identity():
    n, amplitude, r0 = 19, 1000.0, 27.0

    total = log2_packing_count_lower(n, amplitude, r0) + log2_sphere_volume(n, r0) + n

    assert total == pytest.approx(n * math.log2(amplitude))


def test_packing_count_upper_exceeds_lower():
    n, r0 = 19, 27.0

    upper = log2_packing_count_upper(n, 1000.0, r0)
    lower = log2_packing_count_lower(n, 1000.0, r0)

    assert upper - lower == pytest.approx((1 - 0.599) * n)


def test_packing_count_grows_like_n_log_n():
    b, a = 0.99, 1e5

    def per_letter(n):
        return log2_packing_count_lower(n, 1000.0, achievability_radius(n, a, b)) / n

    slope = (per_letter(1e9) - per_letter(1e6)) / (math.log2(1e9) - math.log2(1e6))

    assert slope == pytest.approx((1 - b) / 4, abs=1e-5)


def test_rate_lower_bound_cancelling_amplitude():
    a, b = 1e5, 1e-3
    amplitude = math.e * math.sqrt(a)

    assert rate_lower_bound(1e6, amplitude, a, b) == pytest.approx((1 - b) / 4)


def test_rate_bounds_limits():
    # the two expressions approach 1/4 and 3/2 only as n grows and b shrinks
    lower = rate_lower_bound(1e200, 1000.0, 1e5, 1e-9)
    upper = rate_upper_bound(1e200, 1000.0, 0.2, 0.01, 1e-9)

    assert lower == pytest.approx(0.25, abs=0.01)
    assert upper == pytest.approx(1.5, abs=0.01)


def test_rate_upper_bound_grows_towards_its_limit():
    values = [rate_upper_bound(n, 1000.0, 0.2, 0.01, 0.99) for n in (1e2, 1e4, 1e6, 1e12)]

    assert all(np.diff(values) > 0)
    assert values[-1] < 1.5 + 0.99


def test_exact_rates_track_stirling_forms():
    n = 1e4
    assert rate_lower_bound_exact(n, 1000.0, 1e5, 0.99) == pytest.approx(
        rate_lower_bound(n, 1000.0, 1e5, 0.99), abs=0.01
    )
    assert rate_upper_bound_exact(n, 1000.0, 0.2, 0.01, 0.99) == pytest.approx(
        rate_upper_bound(n, 1000.0, 0.2, 0.01, 0.99), abs=0.01
    )


def test_rates_need_two_letters():
    with pytest.raises(ParameterError):
        rate_lower_bound(1, 1000.0, 1e5, 0.99)


def test_rate_bracket_onset():
    grid = list(range(2, 101))

    onset = rate_bracket_onset(grid, 1000.0, 1e5, 0.99, 1000.0, 0.2, 0.01)

    assert onset is not None
    for n in grid:
        bracketed = rate_lower_bound(n, 1000.0, 1e5, 0.99) < rate_upper_bound(
            n, 1000.0, 0.2, 0.01, 0.99
        )
        assert bracketed == (n >= onset)


def test_rate_bracket_onset_of_empty_grid():
    assert rate_bracket_onset([], 1000.0, 1e5, 0.99, 1000.0, 0.2, 0.01) is None


def test_volume_ratio_rate():
    # this amplitude cancels the constant term, leaving 1/2 - c
    amplitude = 2**1.5 * math.sqrt(math.pi * math.e)

    assert volume_ratio_rate(1e6, amplitude, 0.25) == pytest.approx(0.25, abs=0.01)
    assert volume_ratio_rate(1e6, amplitude, 0.499) == pytest.approx(0.001, abs=1e-6)


def test_volume_ratio_exact_matches_stirling():
    exact = volume_ratio_rate_exact(1e4, 1000.0, 0.25)

    assert exact == pytest.approx(volume_ratio_rate(1e4, 1000.0, 0.25), abs=0.01)


def test_volume_ratio_rejects_bad_exponent():
    with pytest.raises(ParameterError):
        volume_ratio_rate(100, 1000.0, 0.5)


def test_clamp_and_reference_curve():
    assert clamp_probability(409.7) == 1.0
    assert clamp_probability(0.25) == 0.25
    assert reference_curve(19, *TYPE1_REFERENCE) == pytest.approx(1.58 / 19**0.99 - 0.002)


def test_bounds_report():
    report = bounds_report(CHANNEL, code(19))

    assert report.n == 19
    assert report.type2_bound == report.e0_bound + report.e1_bound
    assert report.type1_bound == type1_bound(CHANNEL, code(19))
    assert report.sphere_radius == pytest.approx(math.sqrt(19 * code(19).eps_n))
    assert min(report.type1_bound, report.e0_bound, report.e1_bound) >= 0
