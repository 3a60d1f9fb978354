"""
Deterministic CSV/JSON artifacts and their readers.

Floats are written with repr() so a value read back is bit-for-bit the value
written, and JSON keys are sorted so repeated runs produce identical files.
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from app.dynamics.integrator import DriftReport, Trajectory
from app.errors import ConfigError
from app.linearize.separation import ResidualReport
from app.params.algebra import SystemParams

TRAJECTORY_HEADER = ('t', 'K1', 'K2', 'K3', 'p1', 'p2', 'p3')
SEPARATION_HEADER = ('t', 'x1', 'x2')
QUARTIC_HEADER = ('t', 'quartic')


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats mapped to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(json.dumps(_clean(payload), indent=2, sort_keys=True))
        handle.write('\n')
    return path


def read_json(path: Path) -> Any:
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def write_series_csv(path: Path, header: Sequence[str], rows: np.ndarray) -> Path:
    path = Path(path)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != len(header):
        raise ValueError(f"Expected {len(header)} columns, got {rows.shape[1]}")
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path


def read_series_csv(path: Path, header: Sequence[str]) -> np.ndarray:
    """Rows of a CSV whose header must match `header` exactly."""
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        reader = csv.reader(handle)
        found = tuple(next(reader, ()))
        if found != tuple(header):
            raise ConfigError(f"Unexpected CSV header {list(found)} in {path}", expected=list(header))
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=float).reshape(-1, len(header))


# ─── typed artifacts ───────────────────────────────────────────────────


def write_trajectory(path: Path, traj: Trajectory) -> Path:
    return write_series_csv(path, TRAJECTORY_HEADER, np.column_stack([traj.times, traj.states]))


def read_trajectory(path: Path, params: SystemParams) -> Trajectory:
    rows = read_series_csv(path, TRAJECTORY_HEADER)
    times = rows[:, 0]
    step = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return Trajectory(times=times, states=rows[:, 1:], params=params, step=step)


def write_drift(path: Path, report: DriftReport) -> Path:
    return write_json(path, report.to_dict())


def read_drift(path: Path) -> DriftReport:
    return DriftReport.from_dict(read_json(path))


def write_residual(path: Path, report: ResidualReport) -> Path:
    return write_json(path, report.to_dict())


def read_residual(path: Path) -> ResidualReport:
    return ResidualReport.from_dict(read_json(path))


def read_separation(path: Path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = read_series_csv(path, SEPARATION_HEADER)
    return rows[:, 0], rows[:, 1], rows[:, 2]


def read_double_points(path: Path) -> List[Dict]:
    data = read_json(path)
    if not isinstance(data, list):
        raise ConfigError(f"{path} does not hold a list of double points")
    return data
