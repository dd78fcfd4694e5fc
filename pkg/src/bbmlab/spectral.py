"""Periodic Fourier substrate: grids, fields, multipliers, dealiasing, norms
and Littlewood-Paley projections.

Conventions
-----------
Grid points are ``x_j = -L/2 + j*L/n`` for ``j = 0..n-1``. Modes are stored in
the standard DFT layout ``k = 0, 1, ..., n/2-1, -n/2, ..., -1`` with
wavenumbers ``xi_k = 2*pi*k/L``. The forward transform is numpy's unnormalized
``fft`` of the samples in grid order (the constant phase ``(-1)^k`` coming
from the shifted origin is invisible to multipliers and norms); the inverse
carries ``1/n``. Every norm applies the quadrature weight ``L/n``
explicitly, so ``sum_j |f_j|^2 * L/n == (L/n**2) * sum_k |F_k|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .errors import (
    ConfigurationError,
    EmptyInputError,
    InputError,
    MultiplierDomainError,
    NumericalDataError,
    OutOfScopeError,
)

__all__ = [
    "SpatialGrid",
    "Field",
    "make_grid",
    "to_spectral",
    "to_physical",
    "apply_multiplier",
    "dealias",
    "dealias_mask",
    "sobolev_norm",
    "l2_norm",
    "lp_tx_norm",
    "mixed_norm",
    "lp_eta",
    "lp_lowpass_profile",
    "lp_project",
    "dyadic_shells",
]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid of ``n`` points on a box of period ``length``."""

    n: int
    length: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ConfigurationError(f"mode count must be an integer, got {self.n!r}")
        if not _is_power_of_two(int(self.n)) or self.n < 8:
            raise ConfigurationError(f"mode count must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigurationError(f"domain length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return _points(self.n, self.length)

    @property
    def frequencies(self) -> np.ndarray:
        """Wavenumbers in DFT order."""
        return _frequencies(self.n, self.length)

    @property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers k in DFT order."""
        return _mode_index(self.n)

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.length


@lru_cache(maxsize=64)
def _points(n, length):
    x = -0.5 * length + np.arange(n) * (length / n)
    x.setflags(write=False)
    return x


@lru_cache(maxsize=64)
def _mode_index(n):
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def _frequencies(n, length):
    xi = 2.0 * np.pi * _mode_index(n) / length
    xi.setflags(write=False)
    return xi


def make_grid(n: int, length: float) -> SpatialGrid:
    return SpatialGrid(n, length)


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Real function sampled on a grid, carrying both representations.

    Both arrays are computed eagerly at construction and are read-only, so a
    Field can be shared between threads freely. Build one with
    :meth:`from_physical` or :meth:`from_spectral`.
    """

    grid: SpatialGrid
    physical: np.ndarray = field(repr=False)
    spectral: np.ndarray = field(repr=False)

    @classmethod
    def from_physical(cls, grid: SpatialGrid, values) -> "Field":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise InputError(f"expected {grid.n} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalDataError("field samples contain NaN or Inf")
        return cls(grid, _frozen(values), _frozen(np.fft.fft(values)))

    @classmethod
    def from_spectral(cls, grid: SpatialGrid, modes) -> "Field":
        modes = np.asarray(modes, dtype=complex)
        if modes.shape != (grid.n,):
            raise InputError(f"expected {grid.n} modes, got shape {modes.shape}")
        if not np.all(np.isfinite(modes)):
            raise NumericalDataError("spectral modes contain NaN or Inf")
        return cls(grid, _frozen(np.fft.ifft(modes).real), _frozen(modes))

    @classmethod
    def from_function(cls, grid: SpatialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls.from_physical(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "Field":
        return cls.from_physical(grid, np.zeros(grid.n))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field.from_spectral(self.grid, self.spectral + other.spectral)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field.from_spectral(self.grid, self.spectral - other.spectral)

    def scale(self, c: float) -> "Field":
        return Field.from_spectral(self.grid, c * self.spectral)

    def hermitian_defect(self) -> float:
        """max |F(-k) - conj(F(k))| relative to max |F|; 0 for a real field."""
        F = self.spectral
        mirrored = np.conj(F[(-self.grid.mode_index) % self.grid.n])
        scale = max(np.max(np.abs(F)), 1e-300)
        return float(np.max(np.abs(F - mirrored)) / scale)


def _same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise InputError(f"grid mismatch: {a.grid} vs {b.grid}")


def to_spectral(f: Field) -> Field:
    """Return ``f`` with its spectral representation synchronized.

    Fields are synchronized at construction; this re-derives the modes from the
    physical samples, which is what callers holding a spectrally-built field
    with a non-real Nyquist mode may want.
    """
    return Field.from_physical(f.grid, f.physical)


def to_physical(f: Field) -> Field:
    return Field.from_spectral(f.grid, f.spectral)


Multiplier = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def _evaluate_multiplier(grid: SpatialGrid, m: Multiplier) -> np.ndarray:
    xi = grid.frequencies
    values = m(xi) if callable(m) else m
    values = np.broadcast_to(np.asarray(values, dtype=complex), xi.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise MultiplierDomainError(
            f"multiplier is not finite at xi = {xi[bad][:5].tolist()}"
        )
    return values


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    """Multiply every mode by ``m(xi_k)``.

    ``m`` is either a vectorized callable of the wavenumber array or an array
    already laid out in DFT order.
    """
    return Field.from_spectral(f.grid, f.spectral * _evaluate_multiplier(f.grid, m))


@lru_cache(maxsize=64)
def _dealias_mask(n):
    mask = np.abs(_mode_index(n)) <= n / 3.0
    mask.setflags(write=False)
    return mask


def dealias_mask(grid: SpatialGrid) -> np.ndarray:
    """Boolean mask of retained modes under the two-thirds rule (|k| <= n/3)."""
    return _dealias_mask(grid.n)


def dealias(f: Field) -> Field:
    return Field.from_spectral(f.grid, np.where(dealias_mask(f.grid), f.spectral, 0.0))


def sobolev_norm(f: Field, s: float = 0.0) -> float:
    if s < 0:
        raise OutOfScopeError(f"negative regularity s={s} is not supported")
    grid = f.grid
    weight = (1.0 + grid.frequencies**2) ** s
    total = np.sum(weight * np.abs(f.spectral) ** 2) * grid.length / grid.n**2
    return float(np.sqrt(total))


def l2_norm(f: Field) -> float:
    """Trapezoidal L2 norm of the physical samples."""
    return float(np.sqrt(np.sum(f.physical**2) * f.grid.spacing))


def mixed_norm(times: np.ndarray, samples: np.ndarray, spacing: float, q: float, p: float) -> float:
    """(int (int |f|^p dx)^(q/p) dt)^(1/q) for ``samples`` of shape (nt, n)."""
    if not (np.isfinite(q) and np.isfinite(p)):
        raise ConfigurationError("mixed norms need finite exponents")
    if q < 1 or p < 1:
        raise ConfigurationError(f"exponents must be >= 1, got q={q}, p={p}")
    spatial = np.sum(np.abs(samples) ** p, axis=1) * spacing
    inner = spatial ** (q / p)
    if len(times) == 1:
        return 0.0
    return float(trapezoid(inner, times) ** (1.0 / q))


def lp_tx_norm(trace: Sequence, q: float, p: float) -> float:
    """Discrete ``L_t^q L_x^p`` norm of a trace of ``(time, Field)`` pairs."""
    if len(trace) == 0:
        raise EmptyInputError("trace is empty")
    times = np.array([t for t, _ in trace], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise InputError("trace times must be strictly increasing")
    grid = trace[0][1].grid
    for _, f in trace:
        if f.grid != grid:
            raise InputError("trace fields live on different grids")
    samples = np.stack([f.physical for _, f in trace])
    return mixed_norm(times, samples, grid.spacing, q, p)


# Littlewood-Paley cut-off.
#
# lowpass(xi) equals 1 for |xi| <= 9/5 and 0 for |xi| >= 2, with a C-infinity
# transition. eta(xi) = lowpass(xi) - lowpass(2 xi) then has plateau
# [1, 9/5] (containing [6/5, 9/5]), support in [9/10, 2], and the dyadic sum
# telescopes to 1 for every xi != 0.

_LP_INNER = 9.0 / 5.0
_LP_OUTER = 2.0


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def lp_lowpass_profile(xi):
    """Smooth low-pass profile; equals sum of eta(xi/M) over dyadic M <= 1."""
    r = np.abs(np.asarray(xi, dtype=float))
    return 1.0 - _smooth_step((r - _LP_INNER) / (_LP_OUTER - _LP_INNER))


def lp_eta(xi):
    xi = np.asarray(xi, dtype=float)
    return lp_lowpass_profile(xi) - lp_lowpass_profile(2.0 * xi)


def dyadic_shells(grid: SpatialGrid, xi_min: float | None = None) -> list[float]:
    """Dyadic N whose shell support (9N/10, 2N) meets the band [xi_min, nyquist]."""
    lo = 2.0 * np.pi / grid.length if xi_min is None else xi_min
    k_lo = int(np.floor(np.log2(lo / 2.0)))
    k_hi = int(np.ceil(np.log2(grid.nyquist / 0.9)))
    return [2.0**k for k in range(k_lo, k_hi + 1) if 2.0 * 2.0**k > lo and 0.9 * 2.0**k < grid.nyquist]


def lp_project(f: Field, N: float, mode: str = "shell") -> Field:
    """Littlewood-Paley style frequency projection.

    ``mode="shell"`` applies eta(xi/N); ``"low"`` applies the sum over dyadic
    M <= N of eta(xi/M) (the mean mode is kept); ``"high"`` is a sharp cut that
    zeroes every |xi| <= N.
    """
    if not N > 0:
        raise ConfigurationError(f"projection scale must be positive, got {N}")
    xi = f.grid.frequencies
    if mode == "shell":
        m = lp_eta(xi / N)
    elif mode == "low":
        m = lp_lowpass_profile(xi / N)
    elif mode == "high":
        m = (np.abs(xi) > N).astype(float)
    else:
        raise ConfigurationError(f"unknown projection mode {mode!r}")
    return apply_multiplier(f, m)
