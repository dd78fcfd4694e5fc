import math

import numpy as np
import pytest

from bbmlab.errors import (
    ConfigurationError,
    EmptyInputError,
    InputError,
    MultiplierDomainError,
    NumericalDataError,
    OutOfScopeError,
)
from bbmlab.spectral import (
    Field,
    apply_multiplier,
    dealias,
    dyadic_shells,
    l2_norm,
    lp_eta,
    lp_lowpass_profile,
    lp_project,
    lp_tx_norm,
    make_grid,
    sobolev_norm,
    to_spectral,
)
from bbmlab.symbols import bbm, symbol


def test_grid_frequencies_unit_period():
    g = make_grid(8, 2 * math.pi)
    assert sorted(g.frequencies.tolist()) == [-4, -3, -2, -1, 0, 1, 2, 3]


def test_grid_spacing():
    assert make_grid(16, 40.0).spacing == 2.5


@pytest.mark.parametrize("n,length", [(7, 10.0), (4, 10.0), (16, 0.0), (16, -1.0)])
def test_grid_rejects_bad_parameters(n, length):
    with pytest.raises(ConfigurationError):
        make_grid(n, length)


def test_constant_has_only_mean_mode():
    g = make_grid(32, 10.0)
    f = to_spectral(Field.from_physical(g, np.ones(g.n)))
    assert f.spectral[0] == pytest.approx(g.n)
    assert np.max(np.abs(f.spectral[1:])) < 1e-12


def test_cosine_excites_two_modes():
    g = make_grid(64, 2 * math.pi)
    f = Field.from_function(g, lambda x: np.cos(3 * x))
    nz = np.nonzero(np.abs(f.spectral) > 1e-9)[0]
    assert sorted(g.mode_index[nz].tolist()) == [-3, 3]
    assert abs(f.spectral[nz[0]]) == pytest.approx(abs(f.spectral[nz[1]]))


def test_real_field_is_hermitian():
    g = make_grid(128, 7.0)
    f = Field.from_physical(g, np.random.default_rng(1).standard_normal(g.n))
    assert f.hermitian_defect() < 1e-14


def test_fields_are_read_only():
    g = make_grid(16, 1.0)
    f = Field.zeros(g)
    with pytest.raises(ValueError):
        f.physical[0] = 1.0


def test_nan_rejected():
    g = make_grid(16, 1.0)
    vals = np.zeros(g.n)
    vals[3] = np.nan
    with pytest.raises(NumericalDataError):
        Field.from_physical(g, vals)


def test_identity_multiplier():
    g = make_grid(64, 5.0)
    f = Field.from_function(g, lambda x: np.exp(-x**2))
    out = apply_multiplier(f, lambda xi: np.ones_like(xi))
    assert np.max(np.abs(out.physical - f.physical)) < 1e-14


def test_derivative_multiplier_on_sine():
    g = make_grid(32, 2 * math.pi)
    f = Field.from_function(g, np.sin)
    out = apply_multiplier(f, lambda xi: 1j * xi)
    assert np.max(np.abs(out.physical - np.cos(g.x))) < 1e-12


def test_unimodular_multiplier_preserves_l2():
    g = make_grid(256, 40.0)
    f = Field.from_function(g, lambda x: np.exp(-x**2) * (1 + x))
    m = bbm(0.1)
    out = apply_multiplier(f, lambda xi: np.exp(1j * 0.7 * symbol(m, xi)))
    assert abs(l2_norm(out) - l2_norm(f)) < 1e-12


def test_nonfinite_multiplier_rejected():
    g = make_grid(16, 2 * math.pi)
    f = Field.from_function(g, np.sin)
    with np.errstate(divide="ignore"):
        with pytest.raises(MultiplierDomainError):
            apply_multiplier(f, lambda xi: 1.0 / xi)


def test_dealias_keeps_low_band():
    g = make_grid(128, 10.0)
    k = 2 * math.pi / g.length
    f = Field.from_function(g, lambda x: np.sin(5 * k * x) + np.cos(30 * k * x))
    assert np.max(np.abs(dealias(f).physical - f.physical)) < 1e-13


def test_dealias_kills_top_mode():
    g = make_grid(64, 2 * math.pi)
    f = Field.from_function(g, lambda x: np.cos((g.n // 2 - 1) * x))
    assert np.max(np.abs(dealias(f).physical)) < 1e-13


def test_dealias_kills_first_mode_above_band():
    g = make_grid(128, 2 * math.pi)
    f = Field.from_function(g, lambda x: np.sin((g.n // 3 + 1) * x))
    assert np.max(np.abs(dealias(f).physical)) < 1e-13


def test_sobolev_norms_of_sine():
    g = make_grid(32, 2 * math.pi)
    f = Field.from_function(g, np.sin)
    assert sobolev_norm(f, 0) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    # Two modes at xi = +-1, each of modulus n/2: (L/n^2) * 2 * 2 * (n/2)^2 = 2 pi.
    assert sobolev_norm(f, 1) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-13)
    assert sobolev_norm(Field.zeros(g), 0) == 0.0


def test_sobolev_negative_rejected():
    g = make_grid(16, 1.0)
    with pytest.raises(OutOfScopeError):
        sobolev_norm(Field.zeros(g), -0.5)


def test_mixed_norm_constant_in_time():
    g = make_grid(64, 2 * math.pi)
    f = Field.from_function(g, np.sin)
    trace = [(t, f) for t in np.linspace(0, 3, 7)]
    assert lp_tx_norm(trace, 1, 2) == pytest.approx(3 * math.sqrt(math.pi), rel=1e-12)


def test_mixed_norm_of_one():
    g = make_grid(16, 2 * math.pi)
    one = Field.from_physical(g, np.ones(g.n))
    trace = [(t, one) for t in np.linspace(0, 1, 5)]
    assert lp_tx_norm(trace, 2, 2) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)
    zero = Field.zeros(g)
    assert lp_tx_norm([(0.0, zero), (1.0, zero)], 3, 2) == 0.0


def test_mixed_norm_errors():
    g = make_grid(16, 1.0)
    z = Field.zeros(g)
    with pytest.raises(EmptyInputError):
        lp_tx_norm([], 2, 2)
    with pytest.raises(InputError):
        lp_tx_norm([(1.0, z), (0.5, z)], 2, 2)
    with pytest.raises(InputError):
        lp_tx_norm([(0.0, z), (1.0, Field.zeros(make_grid(32, 1.0)))], 2, 2)
    with pytest.raises(ConfigurationError):
        lp_tx_norm([(0.0, z), (1.0, z)], math.inf, 2)


def test_eta_plateau_and_support():
    xi = np.linspace(-3, 3, 6001)
    eta = lp_eta(xi)
    a = np.abs(xi)
    assert np.all(eta[(a >= 1.2) & (a <= 1.8)] == 1.0)
    assert np.all(eta[(a <= 0.9) | (a >= 2.0)] == 0.0)
    assert np.all((eta >= 0) & (eta <= 1))


def test_eta_partition_of_unity():
    xi = np.geomspace(1e-3, 1e3, 997)
    total = sum(lp_eta(xi / 2.0**j) for j in range(-15, 16))
    assert np.max(np.abs(total - 1.0)) < 1e-14


def test_lowpass_is_telescoped_sum():
    xi = np.linspace(-10, 10, 801)
    N = 4.0
    partial = sum(lp_eta(xi / (N / 2.0**j)) for j in range(0, 40))
    expected = lp_lowpass_profile(xi / N) - lp_lowpass_profile(xi / (N / 2.0**40))
    assert np.max(np.abs(partial - expected)) < 1e-14


def test_lowpass_above_nyquist_is_identity():
    g = make_grid(64, 10.0)
    f = Field.from_function(g, lambda x: np.exp(-x**2))
    out = lp_project(f, 4 * g.nyquist, "low")
    assert np.max(np.abs(out.physical - f.physical)) < 1e-15


def test_shell_passes_plateau_harmonic():
    g = make_grid(128, 2 * math.pi)
    N = 8.0
    f = Field.from_function(g, lambda x: np.sin(12 * x))  # 12 in [6N/5, 9N/5] = [9.6, 14.4]
    out = lp_project(f, N, "shell")
    assert np.max(np.abs(out.physical - f.physical)) < 1e-13


def test_highpass_kills_low_harmonic():
    g = make_grid(128, 2 * math.pi)
    eps = 0.05  # threshold 1/(5 eps) = 4
    f = Field.from_function(g, lambda x: np.sin(3 * x) + np.cos(4 * x))
    out = lp_project(f, 1 / (5 * eps), "high")
    assert np.max(np.abs(out.physical)) < 1e-14


def test_dyadic_shells_cover_band():
    g = make_grid(256, 20.0)
    shells = dyadic_shells(g)
    xi = np.abs(g.frequencies)
    xi = xi[xi > 0]
    total = sum(lp_eta(xi / N) for N in shells)
    assert np.max(np.abs(total - 1.0)) < 1e-14


def test_project_rejects_bad_scale():
    g = make_grid(16, 1.0)
    with pytest.raises(ConfigurationError):
        lp_project(Field.zeros(g), 0.0)
    with pytest.raises(ConfigurationError):
        lp_project(Field.zeros(g), 1.0, "band")
