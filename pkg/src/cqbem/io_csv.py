"""Plain-text result files: CSV traces and a JSON run report.

Field trace rows are (t, point_id, x, y, z, u); density rows are
(t, dof, value). Floats carry 17 significant digits so round-trips are
exact, lines end in LF on every platform.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FIELD_HEADER = ["t", "point_id", "x", "y", "z", "u"]
DENSITY_HEADER = ["t", "dof", "value"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(path, times, points, field) -> None:
    """Observation trace, one row per (time, point)."""
    times = np.asarray(times)
    points = np.atleast_2d(np.asarray(points))
    field = np.asarray(field)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FIELD_HEADER)
        for n, t in enumerate(times):
            for p, xyz in enumerate(points):
                writer.writerow([_fmt(t), p, _fmt(xyz[0]), _fmt(xyz[1]), _fmt(xyz[2]),
                                 _fmt(field[n, p])])


def read_field_csv(path):
    """Inverse of write_field_csv: (times, points, field)."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    point_ids = rows[:, 1].astype(int)
    n_pts = point_ids.max() + 1
    times = rows[point_ids == 0, 0]
    points = rows[: n_pts, 2:5]
    field = rows[:, 5].reshape(times.shape[0], n_pts)
    return times, points, field


def write_density_csv(path, times, density) -> None:
    """Boundary density trace, one row per (time, panel dof)."""
    times = np.asarray(times)
    density = np.asarray(density)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DENSITY_HEADER)
        for n, t in enumerate(times):
            for j in range(density.shape[1]):
                writer.writerow([_fmt(t), j, _fmt(density[n, j])])


def read_density_csv(path):
    """Inverse of write_density_csv: (times, density)."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dofs = rows[:, 1].astype(int)
    n_dof = dofs.max() + 1
    times = rows[dofs == 0, 0]
    return times, rows[:, 2].reshape(times.shape[0], n_dof)


def write_report_json(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
