import numpy as np
import pytest
from hypothesis import given, strategies as st

from slowpairs.errors import ValidityError
from slowpairs.source import (
    ChannelSpec,
    NoiseModel,
    PumpSpec,
    pair_efficiency,
    pair_rate,
    peak_power,
    singles_rate,
)

PUMP = PumpSpec(1545.35e-9, 1e-4, 1e8, 130e-12)
CHANNEL = ChannelSpec(25e9, 100e9, 125e9)
L_EFF = 3.8187923113478715e-4


def test_peak_power():
    assert peak_power(PumpSpec(1545e-9, 1e8 * 130e-12, 1e8, 130e-12)) == pytest.approx(1.0)
    assert peak_power(PUMP) == pytest.approx(7.692307692307693e-3, rel=1e-12)
    assert peak_power(PUMP.with_power(2e-4)) == pytest.approx(2 * peak_power(PUMP))


def test_pump_invariants():
    with pytest.raises(ValidityError):
        PumpSpec(1545e-9, 1e-4, 1e8, 1e-8)  # duty cycle 1
    with pytest.raises(ValidityError):
        PumpSpec(1545e-9, -1e-4, 1e8, 1e-10)


def test_pair_rate_crow_point():
    assert pair_rate(9000.0, 0.0, L_EFF, CHANNEL, PUMP) == 0.0
    mu = pair_rate(9000.0, peak_power(PUMP), L_EFF, CHANNEL, PUMP)
    assert mu == pytest.approx(2.271609907873037e-3, rel=1e-12)


@given(st.floats(1e-7, 1e-2))
def test_pair_rate_quadratic_in_power(p):
    a = pair_rate(9000.0, peak_power(PUMP.with_power(p)), L_EFF, CHANNEL, PUMP)
    b = pair_rate(9000.0, peak_power(PUMP.with_power(2 * p)), L_EFF, CHANNEL, PUMP)
    assert b / a == pytest.approx(4.0, rel=1e-12)


@given(st.floats(0.01, 100))
def test_pair_rate_depends_on_gamma_times_length(k):
    a = pair_rate(9000.0, 7e-3, L_EFF, CHANNEL, PUMP)
    b = pair_rate(9000.0 * k, 7e-3, L_EFF / k, CHANNEL, PUMP)
    assert b == pytest.approx(a, rel=1e-12)


def test_pair_rate_outside_gain_bandwidth():
    with pytest.raises(ValidityError):
        pair_rate(9000.0, 7e-3, L_EFF, ChannelSpec(25e9, 200e9, 125e9), PUMP)


def test_singles_rate():
    assert singles_rate(0.0, NoiseModel(), 1e-4).total == 0.0
    mu_c = 2.27e-3
    pure = singles_rate(mu_c, NoiseModel(0.0, mu_c / 1e-8), 1e-4)
    assert pure.total == pytest.approx(mu_c)
    assert pure.noise == pytest.approx(0.0, abs=1e-15)
    linear = singles_rate(mu_c, NoiseModel(500.0, 0.0), 1e-4)
    assert linear.total == pytest.approx(0.05)
    assert linear.total > 20 * mu_c
    assert linear.noise == pytest.approx(0.05 - mu_c)


@given(st.floats(0, 1e4), st.floats(0, 1e8), st.floats(0, 1e-3), st.floats(0, 1e-3))
def test_singles_monotone_in_power(a, b, p1, p2):
    lo, hi = sorted((p1, p2))
    noise = NoiseModel(a, b)
    assert singles_rate(0.0, noise, lo).total <= singles_rate(0.0, noise, hi).total


def test_pair_efficiency():
    assert pair_efficiency(2.0**2 * 3.0**2 * 0.5, 2.0, 3.0, 0.5) == pytest.approx(1.0)
    mu = pair_rate(9000.0, peak_power(PUMP), L_EFF, CHANNEL, PUMP)
    eff = pair_efficiency(mu, peak_power(PUMP), 420e-6, 0.2)
    assert eff == pytest.approx(1.0881578073428e9, rel=1e-9)
    assert abs(eff - 1.2e9) / 1.2e9 < 0.25


def test_pair_efficiency_independent_of_power():
    powers = np.logspace(-6, -2, 25)
    vals = []
    for p in powers:
        pump = PUMP.with_power(p)
        mu = pair_rate(9000.0, peak_power(pump), L_EFF, CHANNEL, pump)
        vals.append(pair_efficiency(mu, peak_power(pump), 420e-6, 0.2))
    closed = PUMP.pulse_width * 9000.0**2 * (L_EFF / 420e-6) ** 2 * CHANNEL.bandwidth_hz / 0.2
    assert np.allclose(vals, closed, rtol=1e-12)


def test_channel_helpers():
    assert CHANNEL.temporal_modes(130e-12) == 3
    assert CHANNEL.bandwidth_nm(1545.35e-9) == pytest.approx(0.19915, rel=1e-4)
