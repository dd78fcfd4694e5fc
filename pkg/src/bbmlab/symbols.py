"""Dispersion symbols of the rescaled BBM and KdV flows and the resonance
function of the bilinear interaction.

Everything here is vectorized over numpy arrays and uses the factored forms,
which stay accurate for |xi| of order 1/eps and beyond.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "DispersionModel",
    "bbm",
    "kdv",
    "japanese",
    "symbol",
    "symbol_d1",
    "symbol_d2",
    "symbol_d3",
    "symbol_defect",
    "nonlinear_symbol",
    "inflection_points",
    "resonance_z",
    "resonance_z_prime",
    "resonance_z_prime_unfactored",
    "resonance_gap",
    "IDENTITY_TOLERANCES",
    "check_identities",
]


@dataclass(frozen=True)
class DispersionModel:
    kind: str
    eps: Optional[float] = None

    def __post_init__(self):
        if self.kind == "bbm-eps":
            if self.eps is None or not (0.0 < float(self.eps) <= 1.0):
                raise ConfigurationError(f"BBM eps must lie in (0, 1], got {self.eps!r}")
            object.__setattr__(self, "eps", float(self.eps))
        elif self.kind == "kdv":
            if self.eps is not None:
                raise ConfigurationError("the KdV model takes no eps")
        else:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")

    @property
    def is_bbm(self) -> bool:
        return self.kind == "bbm-eps"

    @property
    def eps2(self) -> float:
        """eps squared, 0 for KdV."""
        return self.eps**2 if self.is_bbm else 0.0

    def label(self) -> str:
        return f"bbm-eps(eps={self.eps:g})" if self.is_bbm else "kdv"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "eps": self.eps}


def bbm(eps: float) -> DispersionModel:
    return DispersionModel("bbm-eps", eps)


def kdv() -> DispersionModel:
    return DispersionModel("kdv")


def japanese(x):
    """<x> = sqrt(1 + x^2)."""
    return np.sqrt(1.0 + np.square(x))


def symbol(m: DispersionModel, xi):
    xi = np.asarray(xi, dtype=float)
    # Product rather than pow keeps s exactly odd.
    return xi * xi * xi / (1.0 + m.eps2 * xi * xi)


def symbol_d1(m: DispersionModel, xi):
    """s'(xi) = 3 xi^2/<eps xi>^2 - 2 eps^2 xi^4/<eps xi>^4."""
    xi = np.asarray(xi, dtype=float)
    w = 1.0 + m.eps2 * xi**2
    return 3.0 * xi**2 / w - 2.0 * m.eps2 * xi**4 / w**2


def symbol_d2(m: DispersionModel, xi):
    xi = np.asarray(xi, dtype=float)
    e2x2 = m.eps2 * xi**2
    return 2.0 * xi * (3.0 - e2x2) / (1.0 + e2x2) ** 3


def symbol_d3(m: DispersionModel, xi):
    xi = np.asarray(xi, dtype=float)
    e2x2 = m.eps2 * xi**2
    return 6.0 * (1.0 - 6.0 * e2x2 + e2x2**2) / (1.0 + e2x2) ** 4


def symbol_defect(m: DispersionModel, xi):
    """xi^3 - s(xi), computed without subtraction: eps^2 xi^5/(1+eps^2 xi^2)."""
    xi = np.asarray(xi, dtype=float)
    return m.eps2 * xi**5 / (1.0 + m.eps2 * xi**2)


def nonlinear_symbol(m: DispersionModel, xi):
    """i xi/(1+eps^2 xi^2): the multiplier applied to u^2 in the nonlinearity."""
    xi = np.asarray(xi, dtype=float)
    return 1j * xi / (1.0 + m.eps2 * xi**2)


def inflection_points(m: DispersionModel) -> dict:
    """Closed-form zeros of s'' and s''' away from xi = 0.

    Returns ``{"d2": [...], "d3": [...]}``, each sorted ascending; both lists are
    empty for KdV (s'' = 6 xi vanishes only at the origin and s''' = 6).
    """
    if not m.is_bbm:
        return {"d2": [], "d3": []}
    e = m.eps
    r2 = np.sqrt(3.0) / e
    r3_big = np.sqrt(3.0 + 2.0 * np.sqrt(2.0)) / e
    r3_small = np.sqrt(3.0 - 2.0 * np.sqrt(2.0)) / e
    return {
        "d2": [-r2, r2],
        "d3": [-r3_big, -r3_small, r3_small, r3_big],
    }


def resonance_z(m: DispersionModel, xi, xi1):
    """z(xi1) = s(xi1) + s(xi - xi1)."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    return symbol(m, xi1) + symbol(m, xi - xi1)


def resonance_z_prime(m: DispersionModel, xi, xi1):
    """dz/dxi1 in factored form.

    xi (2 xi1 - xi) / (<eps xi1>^2 <eps(xi-xi1)>^2)
        * (2/<eps xi1>^2 + 2/<eps(xi-xi1)>^2 - 1)
    """
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    a = 1.0 + m.eps2 * xi1**2
    b = 1.0 + m.eps2 * (xi - xi1) ** 2
    return xi * (2.0 * xi1 - xi) / (a * b) * (2.0 / a + 2.0 / b - 1.0)


def resonance_z_prime_unfactored(m: DispersionModel, xi, xi1):
    """dz/dxi1 = s'(xi1) - s'(xi - xi1), term by term."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    return symbol_d1(m, xi1) - symbol_d1(m, xi - xi1)


def resonance_gap(m: DispersionModel, xi):
    """z(xi/2) - s(xi) = -(3/4) xi^3 <eps xi>^-2 <eps xi/2>^-2."""
    xi = np.asarray(xi, dtype=float)
    return -0.75 * xi**3 / ((1.0 + m.eps2 * xi**2) * (1.0 + 0.25 * m.eps2 * xi**2))


IDENTITY_TOLERANCES = {
    "z_prime_factored": 1e-10,
    "resonance_gap": 1e-12,
    "d2_zeros": 1e-10,
    "d3_zeros": 1e-10,
}


class _ArrayModel:
    # Duck-typed stand-in carrying one eps^2 per sample.
    def __init__(self, eps2):
        self.eps2 = eps2


def check_identities(seed: int = 0, sample_count: int = 10_000, eps_min: float = 1e-3, xi_scale: float = 10.0) -> dict:
    """Evaluate the closed-form symbol identities on seeded random samples.

    eps is log-uniform on [eps_min, 1]; xi and xi1 are uniform on
    [-xi_scale/eps, xi_scale/eps]. Residuals per identity:

    * z_prime_factored: |factored - unfactored| / (|s1'| + |s2'|), measured
      against the size of the two derivative terms being differenced.
    * resonance_gap: |closed form - (z(xi/2) - s(xi))| / |closed form|.
    * d2_zeros, d3_zeros: |s''| at +-sqrt(3)/eps and |s'''| at
      +-sqrt(3 +- 2 sqrt(2))/eps.

    Returns {name: {"max_residual", "tolerance", "passed"}}.
    """
    if sample_count < 1:
        raise ConfigurationError(f"sample_count must be >= 1, got {sample_count}", "sample_count")
    rng = np.random.default_rng(seed)
    eps = np.exp(rng.uniform(np.log(eps_min), 0.0, sample_count))
    xi = rng.uniform(-1.0, 1.0, sample_count) * xi_scale / eps
    xi1 = rng.uniform(-1.0, 1.0, sample_count) * xi_scale / eps
    tiny = np.finfo(float).tiny
    m = _ArrayModel(eps**2)

    factored = resonance_z_prime(m, xi, xi1)
    unfactored = resonance_z_prime_unfactored(m, xi, xi1)
    scale = np.abs(symbol_d1(m, xi1)) + np.abs(symbol_d1(m, xi - xi1))
    zp = np.abs(factored - unfactored) / np.maximum(scale, tiny)

    gap = resonance_gap(m, xi)
    direct = resonance_z(m, xi, 0.5 * xi) - symbol(m, xi)
    gp = np.abs(gap - direct) / np.maximum(np.abs(gap), tiny)

    r2 = np.sqrt(3.0) / eps
    d2 = np.abs(np.concatenate([symbol_d2(m, r2), symbol_d2(m, -r2)]))
    d3 = []
    for root in (np.sqrt(3.0 + 2.0 * np.sqrt(2.0)), np.sqrt(3.0 - 2.0 * np.sqrt(2.0))):
        for sign in (1.0, -1.0):
            d3.append(np.abs(symbol_d3(m, sign * root / eps)))
    d3 = np.concatenate(d3)

    residuals = {
        "z_prime_factored": float(zp.max()),
        "resonance_gap": float(gp.max()),
        "d2_zeros": float(d2.max()),
        "d3_zeros": float(d3.max()),
    }
    return {
        name: {"max_residual": r, "tolerance": IDENTITY_TOLERANCES[name], "passed": bool(r <= IDENTITY_TOLERANCES[name])}
        for name, r in residuals.items()
    }
