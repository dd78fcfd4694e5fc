"""Time evolution of BBM_eps and KdV.

Both flows are written as ``u_t = i s(D) u - M(D) (u^2)`` with
``s(xi) = xi^3/(1+eps^2 xi^2)`` and ``M(xi) = i xi/(1+eps^2 xi^2)`` (eps = 0
for KdV). The linear part is applied exactly in Fourier space; the quadratic
term is advanced with classical RK4 on ``v = S(-t) u`` (integrating-factor
RK4, Lawson form).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import BlowUpError, ConfigurationError, InputError
from .invariants import conserved
from .spectral import Field, SpatialGrid, dealias_mask
from .symbols import DispersionModel, nonlinear_symbol, symbol

log = logging.getLogger(__name__)

__all__ = [
    "EvolutionState",
    "StepperConfig",
    "EvolutionRun",
    "initial_state",
    "stability_ceiling",
    "boundary_decay_ratio",
    "linear_propagate",
    "nonlinear_rhs",
    "step_ifrk4",
    "evolve_to",
    "duhamel_residual",
]

BOUNDARY_FRACTION = 0.05
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class EvolutionState:
    model: DispersionModel
    time: float
    field: Field
    step_count: int = 0

    @property
    def grid(self) -> SpatialGrid:
        return self.field.grid


def initial_state(model: DispersionModel, field: Field, time: float = 0.0) -> EvolutionState:
    return EvolutionState(model, float(time), field, 0)


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    dealias: bool = True
    record_every: int = 1
    # Off only for linear checks (Duhamel term vanishes, drifts are round-off).
    nonlinear: bool = True
    # L2 growth beyond this factor of the initial norm is treated as blow-up;
    # the quadratic energy is conserved, so only instability can trigger it.
    blowup_factor: float = 1e6

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}", "dt")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigurationError(
                f"record_every must be a positive integer, got {self.record_every}", "record_every"
            )


def stability_ceiling(field: Field) -> float:
    """Conservative step bound 1/(4 max|xi| max|u|); infinite for a zero field."""
    umax = float(np.max(np.abs(field.physical)))
    ximax = float(np.max(np.abs(field.grid.frequencies)))
    if umax == 0.0:
        return np.inf
    return 1.0 / (4.0 * ximax * umax)


def boundary_decay_ratio(field: Field) -> float:
    """max|u| over the outer 5% of the box divided by max|u| (0 for u = 0)."""
    u = np.abs(field.physical)
    peak = u.max()
    if peak == 0.0:
        return 0.0
    edge = max(1, int(round(0.5 * BOUNDARY_FRACTION * field.grid.n)))
    return float(max(u[:edge].max(), u[-edge:].max()) / peak)


# Precomputed Fourier-side arrays for a (model, grid) pair.
class _Operators:
    def __init__(self, model: DispersionModel, grid: SpatialGrid):
        xi = grid.frequencies
        self.phase = symbol(model, xi)
        self.nl = nonlinear_symbol(model, xi)
        self.mask = dealias_mask(grid)
        self._propagators = {}

    def propagator(self, dt: float) -> np.ndarray:
        E = self._propagators.get(dt)
        if E is None:
            E = np.exp(1j * dt * self.phase)
            if len(self._propagators) < 16:
                self._propagators[dt] = E
        return E

    def rhs(self, modes: np.ndarray, dealias: bool) -> np.ndarray:
        if dealias:
            u = np.fft.ifft(np.where(self.mask, modes, 0.0)).real
            sq = np.fft.fft(u * u)
            sq[~self.mask] = 0.0
        else:
            u = np.fft.ifft(modes).real
            sq = np.fft.fft(u * u)
        return -self.nl * sq


@lru_cache(maxsize=32)
def _operators(model: DispersionModel, grid: SpatialGrid) -> _Operators:
    return _Operators(model, grid)


def linear_propagate(state: EvolutionState, delta_t: float) -> EvolutionState:
    """Apply S(delta_t) = exp(i delta_t s(D)) exactly and advance the clock."""
    E = _operators(state.model, state.grid).propagator(float(delta_t))
    f = Field.from_spectral(state.grid, state.field.spectral * E)
    return replace(state, time=state.time + delta_t, field=f)


def nonlinear_rhs(field: Field, model: DispersionModel, dealias: bool = True) -> Field:
    """-M(D)(u^2), with u and the product both truncated to |k| <= n/3."""
    ops = _operators(model, field.grid)
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = ops.rhs(field.spectral, dealias)
        except FloatingPointError as exc:
            raise BlowUpError("overflow forming u^2", np.nan) from exc
    return Field.from_spectral(field.grid, out)


def _ifrk4(ops: _Operators, u: np.ndarray, dt: float, dealias: bool, nonlinear: bool) -> np.ndarray:
    E = ops.propagator(dt)
    if not nonlinear:
        return u * E
    Eh = ops.propagator(0.5 * dt)
    k1 = ops.rhs(u, dealias)
    k2 = ops.rhs(Eh * (u + 0.5 * dt * k1), dealias)
    k3 = ops.rhs(Eh * u + 0.5 * dt * k2, dealias)
    k4 = ops.rhs(E * u + dt * (Eh * k3), dealias)
    return E * u + (dt / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)


def _advance(ops, u, dt, cfg, t, norm_cap=np.inf):
    with np.errstate(over="ignore", invalid="ignore"):
        out = _ifrk4(ops, u, dt, cfg.dealias, cfg.nonlinear)
        power = float(np.vdot(out, out).real)
    if not np.isfinite(power):
        raise BlowUpError("non-finite value in IFRK4 stage", t)
    if power > norm_cap:
        raise BlowUpError("L2 norm grew past the blow-up guard", t)
    return out


def step_ifrk4(state: EvolutionState, cfg: StepperConfig, dt: float | None = None) -> EvolutionState:
    """One integrating-factor RK4 step of size ``dt`` (default ``cfg.dt``; may be negative)."""
    dt = cfg.dt if dt is None else float(dt)
    ops = _operators(state.model, state.grid)
    modes = _advance(ops, state.field.spectral, dt, cfg, state.time)
    return EvolutionState(
        state.model, state.time + dt, Field.from_spectral(state.grid, modes), state.step_count + 1
    )


class EvolutionRun(NamedTuple):
    state: EvolutionState
    trace: list  # [(t, Field)]
    invariant_log: list  # [(t, ConservedTriple)]
    warnings: list  # [str]


def _check_ceiling(field: Field, dt: float):
    ceiling = stability_ceiling(field)
    if abs(dt) > ceiling:
        raise ConfigurationError(
            f"dt={abs(dt):g} exceeds the stability ceiling {ceiling:.4g} for this data", "dt"
        )


def evolve_to(
    state: EvolutionState,
    T: float,
    cfg: StepperConfig,
    *,
    check_ceiling: bool = True,
    track_invariants: bool = True,
) -> EvolutionRun:
    """Step from ``state.time`` to ``T`` (either direction).

    The last step is shortened to land on ``T`` exactly. Snapshots and the
    conserved triple are recorded at the start, every ``cfg.record_every``
    steps, and at the end. Boundary-decay violations become warnings.
    """
    if not np.isfinite(T):
        raise ConfigurationError(f"final time must be finite, got {T}", "T")
    if check_ceiling and cfg.nonlinear:
        _check_ceiling(state.field, cfg.dt)
    span = float(T) - state.time
    direction = 1.0 if span >= 0 else -1.0
    nfull = int(np.floor(abs(span) / cfg.dt * (1 + 1e-12)))
    remainder = abs(span) - nfull * cfg.dt
    if remainder <= 1e-12 * max(abs(span), 1.0):
        remainder = 0.0

    ops = _operators(state.model, state.grid)
    grid, model = state.grid, state.model
    trace, invariant_log, warnings = [], [], []
    boundary_worst = [0.0, None]

    def record(t, f):
        trace.append((t, f))
        if track_invariants:
            invariant_log.append((t, conserved(f, model)))
        ratio = boundary_decay_ratio(f)
        if ratio > BOUNDARY_TOL and ratio > boundary_worst[0]:
            if boundary_worst[1] is None:
                boundary_worst[1] = t
            boundary_worst[0] = ratio

    record(state.time, state.field)
    u = state.field.spectral
    p0 = float(np.vdot(u, u).real)
    cap = (cfg.blowup_factor**2) * p0 if p0 > 0 else np.inf
    t0, steps = state.time, state.step_count
    h = direction * cfg.dt
    for i in range(1, nfull + 1):
        t = t0 + (i - 1) * h
        u = _advance(ops, u, h, cfg, t, cap)
        steps += 1
        if i % cfg.record_every == 0 or (i == nfull and remainder == 0.0):
            record(t0 + i * h, Field.from_spectral(grid, u))
    t_end = t0 + nfull * h
    if remainder > 0.0:
        u = _advance(ops, u, direction * remainder, cfg, t_end, cap)
        steps += 1
        t_end = float(T)
        record(t_end, Field.from_spectral(grid, u))
    elif nfull > 0:
        t_end = float(T)
        trace[-1] = (t_end, trace[-1][1])
        if track_invariants:
            invariant_log[-1] = (t_end, invariant_log[-1][1])

    if boundary_worst[1] is not None:
        msg = (
            f"boundary decay: edge/peak ratio reached {boundary_worst[0]:.3e} "
            f"(first above {BOUNDARY_TOL:g} at t={boundary_worst[1]:.6g}); "
            "periodic box may be too small"
        )
        warnings.append(msg)
        log.warning(msg)
    final = EvolutionState(model, t_end, trace[-1][1], steps)
    return EvolutionRun(final, trace, invariant_log, warnings)


def _uniform_spacing(times: np.ndarray) -> float:
    h = np.diff(times)
    if np.any(h == 0) or np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
        raise InputError("Duhamel residual needs a uniformly spaced trace")
    return float(h[0])


def duhamel_residual(trace, model: DispersionModel, dealias: bool = True, nonlinear: bool = True) -> float:
    """Max L2 residual of the integral equation over the even trace indices.

    At each even index j the residual is
    ``u(t_j) - S(t_j - t_0) u(t_0) - int_{t_0}^{t_j} S(t_j - t1) N(u(t1)) dt1``
    with ``N = -M(D)(u^2)`` and the integral done by composite Simpson over
    the trace points (written as ``S(t_j) int S(-t1) N dt1``).
    """
    if len(trace) < 3:
        raise InputError("Duhamel residual needs at least 3 snapshots")
    times = np.array([t for t, _ in trace], dtype=float)
    h = _uniform_spacing(times)
    grid = trace[0][1].grid
    ops = _operators(model, grid)
    t0 = times[0]
    u0 = trace[0][1].spectral
    if nonlinear:
        g = np.stack(
            [ops.propagator(-(t - t0)) * ops.rhs(f.spectral, dealias) for t, f in trace]
        )
    else:
        g = np.zeros((len(trace), grid.n), dtype=complex)
    weight = grid.length / grid.n**2
    worst = 0.0
    integral = np.zeros(grid.n, dtype=complex)
    for j in range(2, len(trace), 2):
        integral = integral + (h / 3.0) * (g[j - 2] + 4.0 * g[j - 1] + g[j])
        Et = ops.propagator(times[j] - t0)
        r = trace[j][1].spectral - Et * (u0 + integral)
        worst = max(worst, float(np.sqrt(np.sum(np.abs(r) ** 2) * weight)))
    return worst
