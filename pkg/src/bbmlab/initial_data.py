"""Named initial-data generators.

Every generator takes a grid plus keyword parameters and returns a Field;
``make_initial`` dispatches on the name used in config files.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .spectral import Field, SpatialGrid, dealias_mask


def _sech(x):
    # 1/cosh without overflow for large |x|
    return np.exp(-np.abs(x)) * 2.0 / (1.0 + np.exp(-2.0 * np.abs(x)))


def sech2(grid: SpatialGrid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    return Field.from_physical(grid, amplitude * _sech((grid.x - center) / width) ** 2)


def kdv_soliton_profile(x, t=0.0, c=1.0, x0=0.0):
    """(3c/2) sech^2((sqrt(c)/2)(x - x0 - c t)): travelling wave of w_t + w_xxx + (w^2)_x = 0."""
    return 1.5 * c * _sech(0.5 * np.sqrt(c) * (np.asarray(x) - x0 - c * t)) ** 2


def soliton(grid: SpatialGrid, c: float = 1.0, center: float = 0.0, t: float = 0.0) -> Field:
    if c <= 0:
        raise ConfigurationError(f"soliton speed must be positive, got {c}")
    return Field.from_physical(grid, kdv_soliton_profile(grid.x, t, c, center))


def gaussian(grid: SpatialGrid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    return Field.from_physical(grid, amplitude * np.exp(-(((grid.x - center) / width) ** 2)))


def random_bandlimited(
    grid: SpatialGrid,
    seed: int = 0,
    s: float = 1.0,
    xi_max: float | None = None,
    l2: float | None = 1.0,
    rng: np.random.Generator | None = None,
) -> Field:
    """Real mean-zero field with Gaussian modes scaled by <xi>^(-s-1).

    Modes are kept for 0 < |xi| <= xi_max (default: the two-thirds band), so
    the field is resolved and lies in every H^s. ``l2`` rescales to a given L2
    norm; pass ``None`` to keep the raw amplitudes.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    xi = grid.frequencies
    k = grid.mode_index
    keep = dealias_mask(grid) & (k > 0)
    if xi_max is not None:
        keep &= np.abs(xi) <= xi_max
    modes = np.zeros(grid.n, dtype=complex)
    idx = np.nonzero(keep)[0]
    draws = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    modes[idx] = draws * (1.0 + xi[idx] ** 2) ** (-(s + 1.0) / 2.0)
    modes[(-k[idx]) % grid.n] = np.conj(modes[idx])
    f = Field.from_spectral(grid, modes * grid.n)
    if l2 is not None:
        norm = np.sqrt(np.sum(f.physical**2) * grid.spacing)
        if norm > 0:
            f = f.scale(l2 / norm)
    return f


GENERATORS = {
    "sech2": sech2,
    "soliton": soliton,
    "gaussian": gaussian,
    "random": random_bandlimited,
}


def make_initial(grid: SpatialGrid, name: str, params: dict | None = None, seed: int | None = None) -> Field:
    if name not in GENERATORS:
        raise ConfigurationError(f"unknown initial data {name!r}; choose from {sorted(GENERATORS)}")
    params = dict(params or {})
    if name == "random" and seed is not None:
        params.setdefault("seed", seed)
    try:
        return GENERATORS[name](grid, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}") from exc
