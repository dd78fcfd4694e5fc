import math

import numpy as np
import pytest

from bbmlab.errors import BlowUpError, ConfigurationError, InputError
from bbmlab.evolve import (
    StepperConfig,
    boundary_decay_ratio,
    duhamel_residual,
    evolve_to,
    initial_state,
    linear_propagate,
    nonlinear_rhs,
    stability_ceiling,
    step_ifrk4,
)
from bbmlab.initial_data import kdv_soliton_profile, sech2, soliton
from bbmlab.invariants import drift_report
from bbmlab.spectral import Field, apply_multiplier, l2_norm, make_grid
from bbmlab.symbols import bbm, kdv

REF = make_grid(2048, 80.0)


def _l2(a, b, grid):
    return math.sqrt(np.sum((a - b) ** 2) * grid.spacing)


def test_linear_propagate_zero_time_is_identity():
    g = make_grid(64, 10.0)
    s = initial_state(bbm(0.3), sech2(g))
    out = linear_propagate(s, 0.0)
    assert np.max(np.abs(out.field.physical - s.field.physical)) < 1e-15


def test_linear_propagate_group_property():
    g = make_grid(128, 20.0)
    s = initial_state(bbm(0.2), sech2(g))
    one = linear_propagate(s, 0.8)
    two = linear_propagate(linear_propagate(s, 0.4), 0.4)
    assert np.max(np.abs(one.field.physical - two.field.physical)) < 1e-12
    assert two.time == pytest.approx(0.8)


def test_linear_propagate_single_harmonic():
    # w_t + w_xxx = 0 with w(0) = sin x is solved by sin(x + t).
    g = make_grid(32, 2 * math.pi)
    s = initial_state(kdv(), Field.from_function(g, np.sin))
    out = linear_propagate(s, 0.37)
    assert np.max(np.abs(out.field.physical - np.sin(g.x + 0.37))) < 1e-13


def test_nonlinear_rhs_trivial_fields():
    g = make_grid(64, 2 * math.pi)
    assert np.max(np.abs(nonlinear_rhs(Field.zeros(g), kdv()).physical)) == 0.0
    c = Field.from_physical(g, np.full(g.n, 3.0))
    assert np.max(np.abs(nonlinear_rhs(c, bbm(0.5)).physical)) < 1e-13


def test_nonlinear_rhs_of_sine():
    g = make_grid(64, 2 * math.pi)
    f = Field.from_function(g, np.sin)
    out = nonlinear_rhs(f, kdv())
    assert np.max(np.abs(out.physical + np.sin(2 * g.x))) < 1e-13


def test_step_zero_field():
    g = make_grid(64, 10.0)
    out = step_ifrk4(initial_state(kdv(), Field.zeros(g)), StepperConfig(0.1))
    assert np.max(np.abs(out.field.physical)) == 0.0
    assert out.step_count == 1


def test_soliton_profile_solves_kdv():
    # Residual oracle: w_t = -c w_x for a travelling wave; check
    # -c w_x + w_xxx + 2 w w_x with spectral derivatives.
    c = 1.0
    w = Field.from_physical(REF, kdv_soliton_profile(REF.x, 0.0, c))
    wx = apply_multiplier(w, lambda xi: 1j * xi).physical
    wxxx = apply_multiplier(w, lambda xi: -1j * xi**3).physical
    residual = -c * wx + wxxx + 2 * w.physical * wx
    assert np.max(np.abs(residual)) < 1e-8


def test_soliton_error_at_unit_time():
    c = 1.0
    u0 = soliton(REF, c)
    run = evolve_to(initial_state(kdv(), u0), 1.0, StepperConfig(1e-3, record_every=1000), track_invariants=False)
    exact = kdv_soliton_profile(REF.x, 1.0, c)
    assert _l2(run.state.field.physical, exact, REF) <= 1e-6


def test_richardson_ratio():
    g = make_grid(512, 80.0)
    u0 = soliton(g, 1.0)
    finals = []
    for dt in (4e-3, 2e-3, 1e-3):
        run = evolve_to(initial_state(kdv(), u0), 1.0, StepperConfig(dt, record_every=10**6), track_invariants=False)
        finals.append(run.state.field.physical)
    ratio = _l2(finals[0], finals[1], g) / _l2(finals[1], finals[2], g)
    assert ratio == pytest.approx(16.0, rel=0.1)


def test_zero_duration_keeps_state():
    g = make_grid(64, 20.0)
    s = initial_state(bbm(0.1), sech2(g), time=0.5)
    run = evolve_to(s, 0.5, StepperConfig(1e-2))
    assert len(run.trace) == 1
    assert run.state.time == 0.5
    assert np.array_equal(run.state.field.physical, s.field.physical)


def test_forward_then_backward():
    g = make_grid(512, 80.0)
    u0 = sech2(g)
    cfg = StepperConfig(2e-3, record_every=100)
    fwd = evolve_to(initial_state(bbm(0.1), u0), 1.0, cfg, track_invariants=False)
    back = evolve_to(fwd.state, 0.0, cfg, track_invariants=False)
    assert back.state.time == 0.0
    assert l2_norm(back.state.field - u0) <= 1e-8


def test_partial_last_step_lands_on_T():
    g = make_grid(64, 20.0)
    run = evolve_to(initial_state(kdv(), sech2(g)), 0.105, StepperConfig(0.01, record_every=5))
    times = [t for t, _ in run.trace]
    assert times[0] == 0.0 and times[-1] == 0.105
    assert run.state.step_count == 11


def test_bbm_energy_drift():
    run = evolve_to(initial_state(bbm(0.1), sech2(REF)), 1.0, StepperConfig(1e-3, record_every=100))
    assert drift_report(run.invariant_log)["e1"] <= 1e-8


def test_dt_above_ceiling_is_rejected():
    g = make_grid(256, 40.0)
    u0 = sech2(g)
    with pytest.raises(ConfigurationError) as err:
        evolve_to(initial_state(kdv(), u0), 1.0, StepperConfig(2 * stability_ceiling(u0)))
    assert err.value.path == "dt"


def test_stepper_config_validation():
    with pytest.raises(ConfigurationError):
        StepperConfig(0.0)
    with pytest.raises(ConfigurationError):
        StepperConfig(1e-3, record_every=0)


def test_blowup_detected():
    g = make_grid(128, 40.0)
    u0 = sech2(g)
    with pytest.raises(BlowUpError) as err:
        evolve_to(initial_state(bbm(0.2), u0), 20.0, StepperConfig(2.0), check_ceiling=False)
    assert err.value.time >= 0.0


def test_boundary_warning():
    g = make_grid(128, 10.0)
    run = evolve_to(initial_state(kdv(), sech2(g)), 0.01, StepperConfig(1e-3), check_ceiling=False)
    assert boundary_decay_ratio(sech2(g)) > 1e-8
    assert any("boundary decay" in w for w in run.warnings)


def test_duhamel_linear_flow():
    g = make_grid(256, 40.0)
    cfg = StepperConfig(0.01, nonlinear=False)
    run = evolve_to(initial_state(bbm(0.1), sech2(g)), 0.5, cfg)
    assert duhamel_residual(run.trace, bbm(0.1), nonlinear=False) <= 1e-12


def test_duhamel_zero_data():
    g = make_grid(64, 10.0)
    run = evolve_to(initial_state(bbm(0.1), Field.zeros(g)), 0.1, StepperConfig(0.01))
    assert duhamel_residual(run.trace, bbm(0.1)) == 0.0


def test_duhamel_input_checks():
    g = make_grid(64, 10.0)
    z = Field.zeros(g)
    with pytest.raises(InputError):
        duhamel_residual([(0.0, z), (0.1, z)], kdv())
    with pytest.raises(InputError):
        duhamel_residual([(0.0, z), (0.1, z), (0.3, z)], kdv())
