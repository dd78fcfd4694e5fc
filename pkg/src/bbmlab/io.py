"""File formats: CSV (shortest round-trip floats), JSON sidecars, plot data,
run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .spectral import Field, SpatialGrid


def fmt(x) -> str:
    """Shortest representation that round-trips to the same double."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"missing input file {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"empty CSV file {path}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric cell ({exc})") from exc
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path: Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"missing input file {path}")
    with open(path) as fh:
        return json.load(fh)


def write_columns(path: Path, columns: Sequence[Sequence[float]], comment: str | None = None) -> Path:
    """Whitespace-delimited plot data, one row per sample."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for row in zip(*columns):
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    return path


# Field and trace serialization.

def write_field_physical(path: Path, f: Field) -> Path:
    return write_csv(path, ["x", "value"], zip(f.grid.x, f.physical))


def write_field_spectral(path: Path, f: Field) -> Path:
    return write_csv(path, ["k", "re", "im"], zip(f.grid.mode_index, f.spectral.real, f.spectral.imag))


def read_field(path: Path, length: float) -> Field:
    """Read either field CSV layout back; ``length`` fixes the grid period."""
    header, data = read_csv(path)
    grid = SpatialGrid(len(data), length)
    if header == ["x", "value"]:
        return Field.from_physical(grid, data[:, 1])
    if header == ["k", "re", "im"]:
        k = data[:, 0].astype(int)
        modes = np.zeros(grid.n, dtype=complex)
        modes[k % grid.n] = data[:, 1] + 1j * data[:, 2]
        return Field.from_spectral(grid, modes)
    raise InputError(f"{path}: unrecognized field header {header}")


def write_trace(path: Path, trace) -> Path:
    n = trace[0][1].grid.n if trace else 0
    header = ["t"] + [f"u{j}" for j in range(n)]
    return write_csv(path, header, ([t, *f.physical] for t, f in trace))


def read_trace(path: Path, length: float):
    header, data = read_csv(path)
    grid = SpatialGrid(data.shape[1] - 1, length)
    return [(float(row[0]), Field.from_physical(grid, row[1:])) for row in data]


def config_hash(config_dict: dict) -> str:
    canonical = json.dumps(_jsonable(config_dict), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
