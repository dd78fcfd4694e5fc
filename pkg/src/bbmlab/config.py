"""Experiment configuration: YAML file with nested sections.

Every section maps to a dataclass below. Loading rejects unknown keys and
validates values against the owning types, reporting the dotted field path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigurationError
from .evolve import StepperConfig
from .limit import SweepConfig, check_admissible
from .spectral import make_grid
from .symbols import DispersionModel

__all__ = [
    "GridSection",
    "ModelSection",
    "InitialDataSection",
    "StepperSection",
    "SimulateSection",
    "SweepSection",
    "GrowthSection",
    "IdentitySection",
    "StrichartzSection",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "dump_config",
]


@dataclass
class GridSection:
    n: int = 2048
    length: float = 80.0

    def validate(self, path):
        _wrap(path, lambda: make_grid(self.n, self.length))


@dataclass
class ModelSection:
    kind: str = "kdv"
    eps: Optional[float] = None

    def validate(self, path):
        _wrap(path, lambda: DispersionModel(self.kind, self.eps))

    def build(self) -> DispersionModel:
        return DispersionModel(self.kind, self.eps)


@dataclass
class InitialDataSection:
    name: str = "sech2"
    params: dict = field(default_factory=dict)

    def validate(self, path):
        from .initial_data import GENERATORS

        if self.name not in GENERATORS:
            raise ConfigurationError(f"unknown initial data {self.name!r}", f"{path}.name")


@dataclass
class StepperSection:
    dt: float = 1e-3
    dealias: bool = True
    record_every: int = 10
    # Off only for fault injection: lets an oversized dt reach the blow-up guard.
    enforce_ceiling: bool = True

    def validate(self, path):
        _wrap(path, lambda: self.build())

    def build(self) -> StepperConfig:
        return StepperConfig(self.dt, self.dealias, self.record_every)


@dataclass
class SimulateSection:
    T: float = 1.0
    # A completed run passes when every relative invariant drift is below this.
    drift_tol: float = 1e-8

    def validate(self, path):
        if not math.isfinite(self.T):
            raise ConfigurationError("T must be finite", f"{path}.T")
        if not self.drift_tol > 0:
            raise ConfigurationError("drift_tol must be positive", f"{path}.drift_tol")


@dataclass
class SyntheticSection:
    prefactor: float = 1.0
    exponent: float = 0.4


@dataclass
class SweepSection:
    eps_list: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    s: float = 1.0
    T: float = 0.5
    perturbation: float = 0.0
    dt_overrides: dict = field(default_factory=dict)
    enforce_ceiling: bool = True
    # Set to skip the PDE and fit an injected power law.
    synthetic: Optional[SyntheticSection] = None

    def validate(self, path):
        if len(self.eps_list) < 3:
            raise ConfigurationError("a sweep needs at least 3 eps values", f"{path}.eps_list")


@dataclass
class GrowthSection:
    eps_list: list = field(default_factory=lambda: [0.1, 0.05])
    T: float = 20.0
    ref_time: float = 1.0
    factor: float = 10.0
    # Absolute error level for the fixed-tolerance horizon diagnostic.
    threshold: float = 0.1

    def validate(self, path):
        if len(self.eps_list) < 2:
            raise ConfigurationError("growth needs at least 2 eps values", f"{path}.eps_list")
        if not self.T > self.ref_time > 0:
            raise ConfigurationError("need T > ref_time > 0", f"{path}.T")


@dataclass
class IdentitySection:
    sample_count: int = 10000
    eps_min: float = 1e-3
    xi_scale: float = 10.0

    def validate(self, path):
        if self.sample_count < 1:
            raise ConfigurationError("sample_count must be >= 1", f"{path}.sample_count")
        if not 0 < self.eps_min <= 1:
            raise ConfigurationError("eps_min must lie in (0, 1]", f"{path}.eps_min")


@dataclass
class StrichartzSection:
    eps_list: list = field(default_factory=lambda: [0.1, 0.05])
    q: float = 18.0
    r: float = 3.0
    ensemble_size: int = 100
    window: float = 2.0
    samples: int = 401
    n: int = 1024
    length: float = 64 * math.pi
    data: dict = field(default_factory=lambda: {"s": 1.0})
    # Max ratio at each eps may exceed that at the previous (larger) eps by this factor.
    uniformity_factor: float = 1.25

    def validate(self, path):
        _wrap(path, lambda: check_admissible(self.q, self.r))
        _wrap(path, lambda: make_grid(self.n, self.length))
        if self.ensemble_size < 1:
            raise ConfigurationError("ensemble_size must be >= 1", f"{path}.ensemble_size")


@dataclass
class ExperimentConfig:
    seed: int = 0
    grid: GridSection = field(default_factory=GridSection)
    model: ModelSection = field(default_factory=ModelSection)
    initial_data: InitialDataSection = field(default_factory=InitialDataSection)
    stepper: StepperSection = field(default_factory=StepperSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    growth: GrowthSection = field(default_factory=GrowthSection)
    identity: IdentitySection = field(default_factory=IdentitySection)
    strichartz: StrichartzSection = field(default_factory=StrichartzSection)

    def validate(self):
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            if hasattr(section, "validate"):
                section.validate(f.name)
        self.sweep_config()

    def sweep_config(self, eps_list=None, T=None) -> SweepConfig:
        sw = self.sweep
        try:
            return SweepConfig(
                eps_list=tuple(sw.eps_list if eps_list is None else eps_list),
                s=sw.s,
                T=sw.T if T is None else T,
                initial_data=self.initial_data.name,
                initial_params=dict(self.initial_data.params),
                n=self.grid.n,
                length=self.grid.length,
                dt=self.stepper.dt,
                record_every=self.stepper.record_every,
                seed=self.seed,
                perturbation=sw.perturbation,
                dt_overrides=dict(sw.dt_overrides),
                enforce_ceiling=sw.enforce_ceiling,
            )
        except ConfigurationError as exc:
            raise ConfigurationError(exc.message, f"sweep.{exc.path}" if exc.path else "sweep") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _wrap(path, fn):
    try:
        return fn()
    except ConfigurationError as exc:
        sub = f"{path}.{exc.path}" if exc.path else path
        raise ConfigurationError(exc.message, sub) from exc


_SCALARS = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(value, annotation: str, path: str):
    ann = annotation.replace(" ", "")
    optional = ann.startswith("Optional[")
    if optional:
        if value is None:
            return None
        ann = ann[len("Optional["):-1]
    if ann in _SCALARS:
        kind = _SCALARS[ann]
        if kind is bool:
            if not isinstance(value, bool):
                raise ConfigurationError(f"expected a boolean, got {value!r}", path)
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigurationError(f"expected an integer, got {value!r}", path)
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"expected a number, got {value!r}", path)
            return float(value)
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", path)
        return value
    if ann == "list":
        if not isinstance(value, list):
            raise ConfigurationError(f"expected a list, got {value!r}", path)
        return list(value)
    if ann == "dict":
        if not isinstance(value, dict):
            raise ConfigurationError(f"expected a mapping, got {value!r}", path)
        return dict(value)
    cls = globals().get(ann)
    if cls is not None and dataclasses.is_dataclass(cls):
        return _build(cls, value, path)
    raise ConfigurationError(f"unsupported field type {annotation}", path)


def _build(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"expected a section mapping, got {data!r}", path or None)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigurationError(f"unknown key {unknown[0]!r}", where)
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _coerce(value, fields[name].type, sub)
    return cls(**kwargs)


def parse_config(data: dict) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "")
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} not found")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data or {})


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
