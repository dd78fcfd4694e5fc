"""Conserved functionals of BBM_eps / KdV, drift reports and the a priori H1
ceiling obtained from the energy and Gagliardo-Nirenberg bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, EmptyInputError
from .spectral import Field, dealias, sobolev_norm
from .symbols import DispersionModel

__all__ = [
    "ConservedTriple",
    "conserved",
    "drift_report",
    "gn_ratio_sech_power",
    "estimate_gn_constant",
    "DEFAULT_C_GN",
    "h1_apriori_ceiling",
    "H1Monitor",
    "monitor_h1",
]

DRIFT_FLOOR = 1e-14

# Best constant of |u|_3^3 <= C |u|_2^(5/2) |u'|_2^(1/2) over the family
# u = sech^p(x), maximized at p = 2: (16/15)^(3/4) / (4/3)^(5/4).
# Recomputed by estimate_gn_constant(); see tests/test_invariants.py.
DEFAULT_C_GN = 0.7325683002969413


@dataclass(frozen=True)
class ConservedTriple:
    e0: float
    e1: float
    e2: float

    def as_tuple(self):
        return (self.e0, self.e1, self.e2)

    def to_dict(self):
        return asdict(self)


def conserved(field: Field, model: DispersionModel, dealias_cubic: bool = True) -> ConservedTriple:
    """Mass, quadratic energy and cubic energy of ``field`` under ``model``.

    The quadratic parts are summed in Fourier space (exact Parseval); the
    cubic part is a periodic trapezoid of the dealiased field cubed.
    """
    grid = field.grid
    xi = grid.frequencies
    power = np.abs(field.spectral) ** 2 * (grid.length / grid.n**2)
    e0 = float(field.spectral[0].real * grid.spacing)
    e1 = float(np.sum((1.0 + model.eps2 * xi**2) * power))
    u = dealias(field).physical if dealias_cubic else field.physical
    e2 = float(0.5 * np.sum(xi**2 * power) - np.sum(u**3) * grid.spacing / 3.0)
    return ConservedTriple(e0, e1, e2)


def drift_report(invariant_log: Sequence) -> dict:
    """Max relative drift of each functional over a log of ``(t, triple)``."""
    if len(invariant_log) == 0:
        raise EmptyInputError("invariant log is empty")
    values = np.array([triple.as_tuple() for _, triple in invariant_log])
    ref = np.maximum(np.abs(values[0]), DRIFT_FLOOR)
    drift = np.max(np.abs(values - values[0]), axis=0) / ref
    return {"e0": float(drift[0]), "e1": float(drift[1]), "e2": float(drift[2])}


def gn_ratio_sech_power(p: float) -> float:
    """|u|_3^3 / (|u|_2^(5/2) |u'|_2^(1/2)) for u = sech^p."""
    from scipy.integrate import quad

    def sech(x):
        return np.exp(-np.logaddexp(x, -x) + np.log(2.0))

    cube = 2 * quad(lambda x: sech(x) ** (3 * p), 0, np.inf)[0]
    square = 2 * quad(lambda x: sech(x) ** (2 * p), 0, np.inf)[0]
    slope = 2 * quad(lambda x: (p * sech(x) ** p * np.tanh(x)) ** 2, 0, np.inf)[0]
    return cube / (square**1.25 * slope**0.25)


def estimate_gn_constant(p_bounds=(0.3, 10.0)) -> tuple[float, float]:
    """Maximize the GN ratio over sech^p; returns ``(c_gn, p_star)``.

    The ratio is invariant under amplitude and dilation, so the shape exponent
    is the only free parameter of the family.
    """
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda p: -gn_ratio_sech_power(p), bounds=p_bounds, method="bounded",
        options={"xatol": 1e-10},
    )
    return float(-res.fun), float(res.x)


def h1_apriori_ceiling(R: float, c_gn: float = DEFAULT_C_GN) -> float:
    """sqrt(R^2 + 2 R^2 + 3 (c_gn/3)^(4/3) R^(10/3)).

    ``R^2`` bounds the L2 part through the quadratic energy and the rest bounds
    ``|u_x|^2`` through the cubic energy, for every time.
    """
    if not (R > 0 and c_gn > 0):
        raise ConfigurationError(f"R and c_gn must be positive, got R={R}, c_gn={c_gn}")
    return float(np.sqrt(3.0 * R**2 + 3.0 * (c_gn / 3.0) ** (4.0 / 3.0) * R ** (10.0 / 3.0)))


@dataclass(frozen=True)
class H1Monitor:
    passed: bool
    worst_ratio: float
    worst_time: float
    sup_h1: float
    ceiling: float
    first_violation: float | None = None


def monitor_h1(trace: Sequence, ceiling: float) -> H1Monitor:
    """Compare sup_t |u(t)|_{H1} over ``trace`` with ``ceiling``."""
    sup, t_sup, first = 0.0, (trace[0][0] if len(trace) else 0.0), None
    for t, f in trace:
        h1 = sobolev_norm(f, 1.0)
        if h1 > sup:
            sup, t_sup = h1, t
        if first is None and h1 > ceiling:
            first = t
    ratio = sup / ceiling
    return H1Monitor(first is None, ratio, t_sup, sup, ceiling, first)
