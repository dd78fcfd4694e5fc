"""BBM_eps -> KdV convergence experiments.

Co-evolves the two flows from the same data, fits the eps-rate of the
difference and its growth in time, maps traces between the rescaled and the
physical frame, and measures the Strichartz ratio of the rescaled linear flow
on random ensembles.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BlowUpError,
    ConfigurationError,
    InputError,
    InsufficientDataError,
    InterpolationError,
)
from .evolve import StepperConfig, evolve_to, initial_state
from .initial_data import make_initial, random_bandlimited
from .spectral import Field, SpatialGrid, make_grid, mixed_norm
from .symbols import bbm, kdv, symbol

__all__ = [
    "SweepConfig",
    "RateFit",
    "GrowthFit",
    "ErrorTrace",
    "SweepResult",
    "difference_l2",
    "fit_rate",
    "rate_threshold",
    "run_pair",
    "run_pairs",
    "run_sweep",
    "fit_growth",
    "validity_horizon",
    "threshold_horizon",
    "rescale_to_physical",
    "unscale_to_rescaled",
    "check_admissible",
    "strichartz_ratio",
]

RATE_TOLERANCE = 0.05
GROWTH_FLOOR = 1e-13


@dataclass(frozen=True)
class SweepConfig:
    eps_list: tuple
    s: float = 1.0
    T: float = 0.5
    initial_data: str = "sech2"
    initial_params: dict = field(default_factory=dict)
    n: int = 2048
    length: float = 80.0
    dt: float = 1e-3
    record_every: int = 10
    seed: int = 0
    # L2 size of u_eps0 - w0; 0 gives well-prepared data.
    perturbation: float = 0.0
    # Per-eps step override for the BBM side of a pair (fault injection).
    dt_overrides: dict = field(default_factory=dict)
    enforce_ceiling: bool = True

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        if not eps:
            raise ConfigurationError("eps_list is empty", "eps_list")
        if any(not (0.0 < e <= 1.0) for e in eps):
            raise ConfigurationError(f"every eps must lie in (0, 1], got {eps}", "eps_list")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError(f"eps_list must be strictly decreasing, got {eps}", "eps_list")
        if not (1.0 <= self.s <= 5.0):
            raise ConfigurationError(f"s must lie in [1, 5], got {self.s}", "s")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigurationError(f"T must be positive, got {self.T}", "T")
        if self.perturbation < 0:
            raise ConfigurationError("perturbation must be >= 0", "perturbation")
        StepperConfig(self.dt, record_every=self.record_every)
        make_grid(self.n, self.length)
        overrides = {float(k): float(v) for k, v in dict(self.dt_overrides).items()}
        for e, dt in overrides.items():
            if e not in eps:
                raise ConfigurationError(f"dt override for eps={e} not in eps_list", "dt_overrides")
            StepperConfig(dt)
        object.__setattr__(self, "dt_overrides", overrides)

    @property
    def grid(self) -> SpatialGrid:
        return make_grid(self.n, self.length)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(self.dt, record_every=self.record_every)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    pairs: tuple

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "pairs": [list(p) for p in self.pairs],
        }


@dataclass(frozen=True)
class GrowthFit:
    k_hat: float
    c_hat: float
    times: tuple
    errors: tuple


@dataclass
class ErrorTrace:
    eps: float
    times: np.ndarray
    errors: np.ndarray
    complete: bool = True
    failure: str | None = None

    @property
    def sup_error(self) -> float:
        return float(np.max(self.errors)) if len(self.errors) else float("nan")

    @property
    def t_of_sup(self) -> float:
        return float(self.times[int(np.argmax(self.errors))]) if len(self.errors) else float("nan")


@dataclass
class SweepResult:
    config: SweepConfig
    traces: list
    fit: RateFit | None
    complete: bool

    @property
    def sup_errors(self):
        return [t.sup_error for t in self.traces]

    def verdict(self) -> bool:
        """Rate acceptance: slope >= 2s/5 - 0.05 on a complete sweep."""
        return bool(self.complete and self.fit is not None and self.fit.slope >= rate_threshold(self.config.s))


def rate_threshold(s: float) -> float:
    return 2.0 * s / 5.0 - RATE_TOLERANCE


def difference_l2(u: Field, w: Field) -> float:
    if u.grid != w.grid:
        raise InputError(f"grid mismatch: {u.grid} vs {w.grid}")
    d = u.physical - w.physical
    return float(np.sqrt(np.sum(d * d) * u.grid.spacing))


def fit_rate(pairs: Sequence) -> RateFit:
    """Least-squares line through (log eps, log error)."""
    pairs = tuple((float(e), float(err)) for e, err in pairs)
    if len(pairs) < 2:
        raise InsufficientDataError("a rate fit needs at least two (eps, error) pairs")
    if any(e <= 0 or err <= 0 for e, err in pairs):
        raise InputError("rate fit needs positive eps and errors")
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 and len(pairs) >= 3 else float("nan")
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0) if r2 == r2 else r2, pairs)


def _initial_pair(cfg: SweepConfig):
    w0 = make_initial(cfg.grid, cfg.initial_data, cfg.initial_params, seed=cfg.seed)
    if cfg.perturbation == 0:
        return w0, w0
    norm = math.sqrt(float(np.sum(w0.physical**2)) * cfg.grid.spacing)
    if norm == 0:
        raise ConfigurationError("cannot perturb zero initial data", "perturbation")
    return w0.scale(1.0 + cfg.perturbation / norm), w0


def _kdv_trace(cfg: SweepConfig, w0: Field):
    return evolve_to(initial_state(kdv(), w0), cfg.T, cfg.stepper, track_invariants=False).trace


def _pair_from_traces(eps, bbm_trace, kdv_trace) -> ErrorTrace:
    times = np.array([t for t, _ in bbm_trace])
    errors = np.array([difference_l2(u, w) for (_, u), (_, w) in zip(bbm_trace, kdv_trace)])
    return ErrorTrace(eps, times, errors)


def run_pair(eps: float, cfg: SweepConfig, kdv_trace=None) -> ErrorTrace:
    """Co-evolve BBM_eps and KdV on the shared grid and step; L2 difference per record.

    A precomputed KdV trace for the same config may be passed to avoid
    recomputing it across a sweep.
    """
    u0, w0 = _initial_pair(cfg)
    dt = cfg.dt_overrides.get(eps, cfg.dt)
    stepper = StepperConfig(dt, record_every=cfg.record_every)
    try:
        if kdv_trace is None:
            kdv_trace = _kdv_trace(cfg, w0)
        run = evolve_to(initial_state(bbm(eps), u0), cfg.T, stepper,
                        track_invariants=False, check_ceiling=cfg.enforce_ceiling)
    except (BlowUpError, ConfigurationError) as exc:
        return ErrorTrace(eps, np.array([]), np.array([]), complete=False, failure=str(exc))
    return _pair_from_traces(eps, run.trace, kdv_trace)


def _run_pair_job(args):
    eps, cfg, kdv_trace = args
    return run_pair(eps, cfg, kdv_trace)


def run_pairs(cfg: SweepConfig, jobs: int = 1) -> list:
    """One ErrorTrace per eps in ``cfg.eps_list``, sharing a single KdV run.

    Results keep the order of ``cfg.eps_list`` regardless of scheduling.
    """
    _, w0 = _initial_pair(cfg)
    try:
        kdv_trace = _kdv_trace(cfg, w0)
    except BlowUpError as exc:
        return [ErrorTrace(e, np.array([]), np.array([]), False, f"kdv: {exc}") for e in cfg.eps_list]
    work = [(e, cfg, kdv_trace) for e in cfg.eps_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_pair_job, work))
    return [_run_pair_job(w) for w in work]


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Sup-in-time error for each eps and the log-log rate fit.

    A pair that blows up marks the sweep incomplete; the fit uses the
    completed pairs.
    """
    if len(cfg.eps_list) < 3:
        raise ConfigurationError("a sweep needs at least 3 eps values", "eps_list")
    traces = run_pairs(cfg, jobs)
    usable = [(t.eps, t.sup_error) for t in traces if t.complete and t.sup_error > 0]
    fit = fit_rate(usable) if len(usable) >= 2 else None
    return SweepResult(cfg, traces, fit, all(t.complete for t in traces))


def fit_growth(times, errors, floor: float = GROWTH_FLOOR) -> GrowthFit:
    """Least squares of log(error) against t over points with error > floor."""
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > floor
    if np.count_nonzero(keep) < 3:
        raise InsufficientDataError("growth fit needs at least 3 errors above the floor")
    t, e = times[keep], errors[keep]
    if np.any(np.diff(t) <= 0):
        raise InputError("growth fit needs increasing times")
    k, logc = np.polyfit(t, np.log(e), 1)
    return GrowthFit(float(k), float(np.exp(logc)), tuple(t.tolist()), tuple(e.tolist()))


def _value_at(times, errors, t_ref):
    i = int(np.argmin(np.abs(times - t_ref)))
    if abs(times[i] - t_ref) > 1e-9 * max(1.0, abs(t_ref)):
        raise InputError(f"time {t_ref} is not a record point of the trace")
    return errors[i]


def validity_horizon(times, errors, ref_time: float = 1.0, factor: float = 10.0) -> float | None:
    """First recorded time after ``ref_time`` where error > factor * error(ref_time).

    ``None`` means the trace never crossed (the horizon is beyond the last time).
    """
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    level = factor * _value_at(times, errors, ref_time)
    hit = np.nonzero((times > ref_time) & (errors > level))[0]
    return float(times[hit[0]]) if len(hit) else None


def threshold_horizon(times, errors, tol: float) -> float | None:
    """First recorded time where error > tol (absolute); ``None`` if never."""
    hit = np.nonzero(np.asarray(errors) > tol)[0]
    return float(np.asarray(times)[hit[0]]) if len(hit) else None


# Frame maps.
#
# "normalized": U(t, x) = a f(a^(3/2) t, a^(1/2)(x - t)), a = eps^2, linking the
# rescaled frame to u_t + u_x + (u^2)_x - u_txx = 0.
# "bbm0": U(t, x) = f(eps^2 t, x - t), the substitution producing BBM_eps from
# the alpha-BBM with alpha = eps^2.

_FRAMES = ("normalized", "bbm0")
_INTERP_TOL = 1e-10


def _regrid(modes: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    """Move DFT-ordered modes between sizes (zero-pad or truncate), keeping |k| < min/2."""
    if n_to == n_from:
        return modes.copy()
    m = min(n_from, n_to) // 2
    out = np.zeros(n_to, dtype=complex)
    out[:m] = modes[:m]
    out[n_to - m + 1:] = modes[n_from - m + 1:]
    total = np.sum(np.abs(modes) ** 2)
    dropped = total - np.sum(np.abs(out) ** 2)
    if total > 0 and dropped > _INTERP_TOL**2 * total:
        raise InterpolationError(f"target grid loses {math.sqrt(dropped / total):.2e} of the L2 norm")
    return out * (n_to / n_from)


def _map_trace(trace, amp, dilation, time_factor, shift_sign, target_grid, shift_scale):
    """Shared body of the frame maps.

    Output field at new time T = time_factor * t is amp * f(dilation * (x - shift_sign*shift_scale*T))
    on a grid of length L / dilation.
    """
    out = []
    for t, f in trace:
        src = f.grid
        length = src.length / dilation
        grid = target_grid or make_grid(src.n, length)
        if abs(grid.length - length) > 1e-12 * length:
            raise InterpolationError(
                f"target length {grid.length} must equal {length} to keep the box periodic"
            )
        T = time_factor * t
        modes = _regrid(f.spectral, src.n, grid.n)
        shift = shift_sign * shift_scale * T
        modes = amp * modes * np.exp(-1j * grid.frequencies * shift)
        out.append((T, Field.from_spectral(grid, modes)))
    return out


def _check_frame(frame):
    if frame not in _FRAMES:
        raise ConfigurationError(f"frame must be one of {_FRAMES}, got {frame!r}")


def rescale_to_physical(w_trace, alpha: float, frame: str = "normalized", target_grid: SpatialGrid | None = None):
    """Map a rescaled-frame trace to the physical frame.

    ``normalized``: (t, f) -> (t / a^(3/2), a f(a^(1/2)(x - t_phys))) on a box
    of length L / a^(1/2). ``bbm0``: (t, f) -> (t / a, f(x - t_phys)).
    """
    _check_frame(frame)
    if not (0.0 < alpha <= 1.0):
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}")
    if frame == "normalized":
        return _map_trace(w_trace, alpha, math.sqrt(alpha), alpha**-1.5, 1.0, target_grid, 1.0)
    return _map_trace(w_trace, 1.0, 1.0, 1.0 / alpha, 1.0, target_grid, 1.0)


def unscale_to_rescaled(u_trace, eps: float, frame: str = "normalized", times=None, target_grid=None):
    """Inverse of :func:`rescale_to_physical` with ``alpha = eps**2``.

    ``times`` optionally selects rescaled-frame times to return; each must map
    back to a record point of ``u_trace``.
    """
    _check_frame(frame)
    if not (0.0 < eps <= 1.0):
        raise ConfigurationError(f"eps must lie in (0, 1], got {eps}")
    alpha = eps * eps
    if times is not None:
        factor = alpha**1.5 if frame == "normalized" else alpha
        have = np.array([t for t, _ in u_trace])
        picked = []
        for tau in times:
            i = int(np.argmin(np.abs(have * factor - tau))) if len(have) else -1
            if i < 0 or abs(have[i] * factor - tau) > 1e-9 * max(1.0, abs(tau)):
                raise InputError(f"rescaled time {tau} has no matching record in the trace")
            picked.append(u_trace[i])
        u_trace = picked
    if frame == "normalized":
        # f(tau, y) = U(tau a^(-3/2), y a^(-1/2) + tau a^(-3/2)): shift back by the physical time.
        return _map_trace(u_trace, 1.0 / alpha, 1.0 / math.sqrt(alpha), alpha**1.5, -1.0, target_grid,
                          alpha**-1.5 * math.sqrt(alpha))
    return _map_trace(u_trace, 1.0, 1.0, alpha, -1.0, target_grid, 1.0 / alpha)


# Strichartz diagnostic.

STRICHARTZ_WINDOW = 2.0
STRICHARTZ_SAMPLES = 401


def check_admissible(q: float, r: float):
    if not (6.0 < q < math.inf):
        raise ConfigurationError(f"need 6 < q < inf, got q={q}")
    if not (2.0 <= r < math.inf):
        raise ConfigurationError(f"need 2 <= r < inf, got r={r}")
    if abs(3.0 / q + 1.0 / r - 0.5) > 1e-12:
        raise ConfigurationError(f"(q, r) = ({q}, {r}) violates 3/q + 1/r = 1/2")


def _strichartz_one(u0: Field, eps: float, q: float, r: float, times: np.ndarray) -> float:
    grid = u0.grid
    xi = grid.frequencies
    rhs_modes = np.abs(xi) ** (4.0 / q) * u0.spectral
    rhs = eps ** (4.0 / q) * math.sqrt(float(np.sum(np.abs(rhs_modes) ** 2)) * grid.length / grid.n**2)
    if rhs == 0.0:
        return 0.0
    high = np.where(np.abs(xi) > 1.0 / (5.0 * eps), u0.spectral, 0.0)
    phase = symbol(bbm(eps), xi)
    samples = np.fft.ifft(high[None, :] * np.exp(1j * np.outer(times, phase)), axis=1).real
    return mixed_norm(times, samples, grid.spacing, q, r) / rhs


def strichartz_ratio(
    eps: float,
    q: float = 18.0,
    r: float = 3.0,
    ensemble_size: int = 100,
    seed: int = 0,
    grid: SpatialGrid | None = None,
    window: float = STRICHARTZ_WINDOW,
    samples: int = STRICHARTZ_SAMPLES,
    data: dict | None = None,
    ensemble: Sequence[Field] | None = None,
) -> list:
    """Truncated-window Strichartz ratios over a seeded random ensemble.

    ratio = |S_eps(t) P_{>1/(5 eps)} u0|_{L^q_t([-W, W]) L^r_x} / (eps^(4/q) | |D|^(4/q) u0 |_2)

    Member ``i`` is drawn from the ``i``-th child of ``SeedSequence(seed)``, so
    ensembles are reproducible and independent of evaluation order. An explicit
    ``ensemble`` overrides the random draw.
    """
    check_admissible(q, r)
    if not (0.0 < eps <= 1.0):
        raise ConfigurationError(f"eps must lie in (0, 1], got {eps}")
    times = np.linspace(-window, window, samples)
    if ensemble is None:
        grid = grid or make_grid(1024, 64 * math.pi)
        children = np.random.SeedSequence(seed).spawn(ensemble_size)
        ensemble = [
            random_bandlimited(grid, rng=np.random.default_rng(c), **(data or {})) for c in children
        ]
    return [_strichartz_one(u0, eps, q, r, times) for u0 in ensemble]
