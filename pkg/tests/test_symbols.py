import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from bbmlab.errors import ConfigurationError
from bbmlab.symbols import (
    DispersionModel,
    bbm,
    check_identities,
    inflection_points,
    kdv,
    nonlinear_symbol,
    resonance_gap,
    resonance_z,
    resonance_z_prime,
    resonance_z_prime_unfactored,
    symbol,
    symbol_d1,
    symbol_d2,
    symbol_d3,
    symbol_defect,
)

eps_st = st.floats(min_value=1e-3, max_value=1.0)
xi_st = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def test_model_validation():
    with pytest.raises(ConfigurationError):
        bbm(0.0)
    with pytest.raises(ConfigurationError):
        bbm(1.5)
    with pytest.raises(ConfigurationError):
        DispersionModel("kdv", 0.1)
    with pytest.raises(ConfigurationError):
        DispersionModel("burgers")
    assert kdv().eps2 == 0.0
    assert bbm(0.5).eps2 == 0.25


def test_symbol_values():
    assert symbol(bbm(1.0), 1.0) == 0.5
    assert symbol(bbm(0.3), 0.0) == 0.0
    assert symbol(bbm(1e-6), 2.0) == pytest.approx(8.0, rel=1e-9)
    assert symbol(kdv(), 2.0) == 8.0


def test_symbol_d2_values():
    assert symbol_d2(bbm(1.0), 1.0) == pytest.approx(0.5)
    assert symbol_d2(bbm(0.4), 0.0) == 0.0
    for eps in (1.0, 0.3, 0.01):
        assert abs(symbol_d2(bbm(eps), math.sqrt(3) / eps)) < 1e-12


def test_symbol_d3_values():
    assert symbol_d3(bbm(0.2), 0.0) == 6.0
    for eps in (1.0, 0.3, 0.01):
        for r in (3 + 2 * math.sqrt(2), 3 - 2 * math.sqrt(2)):
            assert abs(symbol_d3(bbm(eps), math.sqrt(r) / eps)) < 1e-10


def test_inflection_points():
    assert inflection_points(bbm(1.0))["d2"] == pytest.approx([-math.sqrt(3), math.sqrt(3)])
    assert inflection_points(bbm(0.5))["d2"] == pytest.approx([-2 * math.sqrt(3), 2 * math.sqrt(3)])
    assert inflection_points(kdv()) == {"d2": [], "d3": []}


def test_d3_zeros_match_root_finder():
    # Oracle: bracketed root search on the closed-form s''' itself.
    m = bbm(1.0)
    roots = sorted(brentq(lambda x: symbol_d3(m, x), a, b, xtol=1e-15) for a, b in [(0.1, 1.0), (1.0, 5.0)])
    closed = inflection_points(m)["d3"][2:]
    assert roots == pytest.approx(closed, abs=1e-12)
    assert closed[0] == pytest.approx(0.41421356, abs=1e-8)


@pytest.mark.parametrize("fn,deriv", [(symbol, symbol_d1), (symbol_d1, symbol_d2), (symbol_d2, symbol_d3)])
@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_derivatives_match_finite_differences(fn, deriv, eps):
    m = bbm(eps)
    xi = np.linspace(-3 / eps, 3 / eps, 41)
    h = 1e-5 / eps
    fd = (fn(m, xi + h) - fn(m, xi - h)) / (2 * h)
    scale = np.max(np.abs(deriv(m, xi)))
    assert np.max(np.abs(fd - deriv(m, xi))) / scale < 1e-7


def test_defect_equals_difference():
    m = bbm(0.1)
    xi = np.linspace(-5, 5, 11)
    assert np.allclose(symbol_defect(m, xi), xi**3 - symbol(m, xi), rtol=1e-12, atol=1e-12)
    assert np.all(symbol_defect(kdv(), xi) == 0)


def test_nonlinear_symbol():
    assert nonlinear_symbol(bbm(1.0), 1.0) == 0.5j
    assert nonlinear_symbol(kdv(), 3.0) == 3j


def test_resonance_z_values():
    assert resonance_z(bbm(1e-8), 2.0, 1.0) == pytest.approx(2.0, abs=1e-6)
    m = bbm(0.3)
    assert resonance_z(m, 3.0, 1.5) == pytest.approx(2 * symbol(m, 1.5))
    assert resonance_z(bbm(1.0), 0.0, 1.0) == 0.0


def test_resonance_z_prime_values():
    m = bbm(0.7)
    assert resonance_z_prime(m, 3.0, 1.5) == 0.0
    h = 1e-6
    fd = (resonance_z(bbm(1.0), 1.0, 1.0 + h) - resonance_z(bbm(1.0), 1.0, 1.0 - h)) / (2 * h)
    assert resonance_z_prime(bbm(1.0), 1.0, 1.0) == pytest.approx(fd, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 100.0), st.floats(0.501, 1.0), st.floats(1e-4, 1e-2))
def test_z_prime_positive_at_low_frequency(xi, frac, eps):
    xi1 = frac * xi
    # Restrict to |eps xi1|, |eps (xi - xi1)| <= 2/5.
    if eps * abs(xi1) > 0.4 or eps * abs(xi - xi1) > 0.4:
        return
    assert resonance_z_prime(bbm(eps), xi, xi1) > 0


@settings(max_examples=300, deadline=None)
@given(eps_st, xi_st, xi_st)
def test_z_prime_factored_matches_unfactored(eps, xi, xi1):
    m = bbm(eps)
    a = resonance_z_prime(m, xi, xi1)
    b = resonance_z_prime_unfactored(m, xi, xi1)
    scale = abs(symbol_d1(m, xi1)) + abs(symbol_d1(m, xi - xi1)) + 1e-300
    assert abs(a - b) / scale < 1e-12


@settings(max_examples=300, deadline=None)
@given(eps_st, xi_st)
def test_resonance_gap_identity(eps, xi):
    # For |eps xi| >> 1 the direct difference cancels, so compare on the scale
    # of the subtracted terms.
    m = bbm(eps)
    z_half = resonance_z(m, xi, xi / 2)
    s = symbol(m, xi)
    gap = resonance_gap(m, xi)
    assert abs(gap - (z_half - s)) <= 1e-14 * (abs(z_half) + abs(s)) + 1e-300


def test_resonance_gap_values():
    assert resonance_gap(bbm(1e-8), 2.0) == pytest.approx(-6.0, abs=1e-6)
    assert resonance_gap(bbm(0.5), 0.0) == 0.0
    assert resonance_gap(bbm(1.0), 2.0) == pytest.approx(-0.6)


@settings(max_examples=100, deadline=None)
@given(eps_st, xi_st)
def test_symbol_is_odd(eps, xi):
    m = bbm(eps)
    assert symbol(m, -xi) == -symbol(m, xi)


def test_identity_report_passes_and_is_seeded():
    a = check_identities(seed=3, sample_count=2000)
    b = check_identities(seed=3, sample_count=2000)
    assert a == b
    assert all(r["passed"] for r in a.values())


def test_identity_report_rejects_zero_samples():
    with pytest.raises(ConfigurationError):
        check_identities(sample_count=0)
