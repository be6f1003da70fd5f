"""CSV and JSON formats shared by the command line tools.

Floats are written with 17 significant digits so files round-trip exactly;
line endings are LF.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .closed_form.families import FamilyKind, GammaFamily, Model, i4_closure
from .moment_dynamics import ClosureTrap, Trajectory
from .ode_engine import fd_derivative

__all__ = [
    "SIMULATE_HEADER",
    "SOLVE_HEADER",
    "MAP_HEADER",
    "TABLE_HEADER",
    "CsvFormatError",
    "fmt",
    "write_csv",
    "read_csv",
    "write_json",
    "trajectory_columns",
    "trajectory_from_simulate",
    "trajectory_from_solve",
    "read_trajectory",
    "read_trap_table",
]

SIMULATE_HEADER = ("t", "I1", "I2", "I3", "I4", "omega_sq", "lambda")
SOLVE_HEADER = ("t", "I2", "omega_sq")
MAP_HEADER = ("tau", "t", "scale", "H", "rho_phi", "p_phi")
TABLE_HEADER = ("t", "omega_sq")


class CsvFormatError(ValueError):
    """Malformed or empty CSV input."""


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(out: IO[str] | str | Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    rows = zip(*columns)
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


def read_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Header and float matrix; raises CsvFormatError on empty or ragged input."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    header = tuple(h.strip() for h in rows[0])
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise CsvFormatError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise CsvFormatError(f"{path}: rows do not match the header")
    return header, data


def write_json(out: IO[str] | str | Path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def trajectory_columns(traj: Trajectory) -> list[np.ndarray]:
    y = traj.states
    return [traj.t, y[:, 0], y[:, 1], y[:, 2], y[:, 3], traj.omega_sq, traj.lambdas()]


def trajectory_from_simulate(data: np.ndarray) -> Trajectory:
    t = data[:, 0]
    return Trajectory(t, data[:, 1:5].copy(), data[:, 5].copy())


def trajectory_from_solve(data: np.ndarray, model: Model, d: int, gamma: float,
                          Lambda: float) -> Trajectory:
    """Rebuild moments from (t, I2, omega_sq) rows of a closure run.

    alpha follows from the first omega^2 sample, I4 from the closure, I3 by
    4th-order differences of I2 on the uniform grid, and I1 is set to 1.
    """
    data = data[np.all(np.isfinite(data), axis=1)]
    if len(data) < 5:
        raise CsvFormatError("need at least 5 finite rows to rebuild moments")
    t, I2, w = data[:, 0], data[:, 1], data[:, 2]
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise CsvFormatError("solve-format input must be on a uniform time grid")
    if model is Model.FLRW:
        alpha = w[0] * I2[0] ** ((gamma * (d - 1) + 2.0) / 2.0) / (gamma * (d - 1))
    else:
        alpha = w[0] * I2[0] ** (gamma / 2.0 + 1.0) / gamma
    fam = GammaFamily(FamilyKind.CUSTOM, d=d, alpha=alpha, Lambda=Lambda, gamma_value=gamma)
    I3 = fd_derivative(I2, float(h[0]))
    I4 = np.array([i4_closure(x, fam, model) for x in I2])
    warnings.warn("solve-format input: I1 set to 1 and I3 rebuilt by finite differences",
                  UserWarning, stacklevel=2)
    states = np.column_stack([np.ones_like(t), I2, I3, I4])
    return Trajectory(t, states, w.copy(), ClosureTrap(fam, model))


def read_trajectory(path: str | Path, model: Model | None = None, d: int = 4,
                    gamma: float | None = None, Lambda: float = 0.0) -> Trajectory:
    """Load a simulate- or solve-format CSV as a Trajectory."""
    header, data = read_csv(path)
    if header == SIMULATE_HEADER:
        return trajectory_from_simulate(data)
    if header == SOLVE_HEADER:
        if gamma is None or model is None:
            raise CsvFormatError("solve-format input needs the model and gamma")
        return trajectory_from_solve(data, model, d, gamma, Lambda)
    raise CsvFormatError(f"{path}: unrecognised header {','.join(header)!r}")


def read_trap_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    header, data = read_csv(path)
    if header != TABLE_HEADER:
        raise CsvFormatError(f"{path}: trap table header must be {','.join(TABLE_HEADER)}")
    return data[:, 0], data[:, 1]
