import math

import pytest
from hypothesis import given, strategies as st

from oracles import effective_length_quad
from slowpairs.device import (
    WaveguideSpec,
    attenuation_coefficient,
    db_to_linear,
    derive,
    effective_length,
    rescale_gamma,
    slowdown_factor,
)
from slowpairs.errors import ValidityError

L = 420e-6


@pytest.mark.parametrize(
    "db, expected",
    [(0.0, 1.0), (-6.0, 0.251188643150958), (-9.0, 0.12589254117941673)],
)
def test_db_to_linear(db, expected):
    assert db_to_linear(db) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_db_to_linear_rejects_nonfinite(bad):
    with pytest.raises(ValueError):
        db_to_linear(bad)


@given(st.floats(-60, 60), st.floats(-60, 60))
def test_db_addition_is_multiplication(a, b):
    assert db_to_linear(a + b) == pytest.approx(db_to_linear(a) * db_to_linear(b), rel=1e-12)


def test_attenuation_coefficient():
    assert attenuation_coefficient(0.0) == 0.0
    assert attenuation_coefficient(2000.0) == pytest.approx(460.517018598809, rel=1e-12)
    assert attenuation_coefficient(15200.0) == pytest.approx(3499.92934135, rel=1e-10)
    with pytest.raises(ValueError):
        attenuation_coefficient(-1.0)


def test_effective_length_lossless_is_exact():
    assert effective_length(0.0, L) == L


@pytest.mark.parametrize(
    "alpha, expected",
    # expected values from numerical quadrature of exp(-alpha z) over [0, L]
    [(460.51701859880916, 3.8187923113478715e-4), (3499.9293413509495, 2.2002378225174015e-4)],
)
def test_effective_length_matches_quadrature(alpha, expected):
    assert effective_length(alpha, L) == pytest.approx(expected, rel=1e-12)
    assert effective_length(alpha, L) == pytest.approx(effective_length_quad(alpha, L), rel=1e-10)


@given(st.floats(0, 1e5), st.floats(0, 1e5), st.floats(1e-6, 1e-2))
def test_effective_length_monotone_in_alpha(a1, a2, length):
    lo, hi = sorted((a1, a2))
    assert effective_length(hi, length) <= effective_length(lo, length) * (1 + 1e-15)
    if hi * length > 1e-12:  # below this the deficit is under one ulp
        assert effective_length(hi, length) < length


@given(st.floats(1e-12, 1e-3), st.floats(1e-6, 1e-2))
def test_effective_length_continuous_at_zero(eps, length):
    assert abs(effective_length(eps, length) - length) <= eps * length**2 / 2 * (1 + 1e-6) + 4e-16 * length


def test_slowdown_factor():
    assert slowdown_factor(3.0, 3.0) == 1.0
    # squared slowdown ratio of CROW (n_g = 38) vs reference (n_g = 5) at equal n
    assert (slowdown_factor(38, 3) / slowdown_factor(5, 3)) ** 2 == pytest.approx(57.76)
    assert slowdown_factor(49 * 2, 3) == pytest.approx(2 * slowdown_factor(49, 3))
    with pytest.raises(ValidityError):
        slowdown_factor(2.0, 3.0)
    with pytest.raises(ValidityError):
        slowdown_factor(0.9, 0.5)


def test_rescale_gamma():
    assert rescale_gamma(650.0, 5.0, 5.0) == 650.0
    assert rescale_gamma(650.0, 5.0, 38.0) == pytest.approx(37544.0)
    # the observed gamma ratio of 14 falls well short of the S^2 ratio
    assert 9000.0 / 650.0 < rescale_gamma(650.0, 5.0, 38.0) / 650.0
    assert rescale_gamma(1.0, 2.0, 4.0) == pytest.approx(4 * rescale_gamma(1.0, 2.0, 2.0))
    with pytest.raises(ValueError):
        rescale_gamma(0.0, 1.0, 1.0)


@given(st.floats(1e-3, 1e5), st.floats(0.1, 100), st.floats(0.1, 10))
def test_rescale_gamma_exactly_quadratic(g, s, k):
    assert rescale_gamma(g, s, k * s) == pytest.approx(k**2 * rescale_gamma(g, s, s), rel=1e-12)


def test_waveguide_invariants():
    ok = dict(length=L, alpha_db=2000.0, group_index=38.0, phase_index=3.0, gamma_eff=9000.0, coupling_db=-9.0)
    WaveguideSpec(**ok)
    for bad in (
        {"length": 0.0},
        {"alpha_db": -1.0},
        {"group_index": 2.0},
        {"phase_index": 0.5, "group_index": 0.8},
        {"gamma_eff": -1.0},
        {"coupling_db": 1.0},
    ):
        with pytest.raises(ValidityError):
            WaveguideSpec(**{**ok, **bad})


def test_derive_proportional_s():
    wg = WaveguideSpec(L, 2000.0, 38.0, 3.0, 9000.0, -9.0, alpha_ref_group_index=5.0)
    fixed = derive(wg)
    scaled = derive(wg, "proportional-s")
    assert fixed.effective_length == pytest.approx(3.8187923113478715e-4, rel=1e-12)
    # 2 dB/mm * 38/5 = 15.2 dB/mm
    assert scaled.alpha_linear == pytest.approx(attenuation_coefficient(15200.0), rel=1e-12)
    assert scaled.effective_length == pytest.approx(2.2002378225174015e-4, rel=1e-10)
    with pytest.raises(ValidityError):
        derive(WaveguideSpec(L, 2000.0, 38.0, 3.0, 9000.0), "proportional-s")
