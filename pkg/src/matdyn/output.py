"""CSV writers with the documented column schemas."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .model import ControlSettings, ModelParameters, classify_regime

TRAJECTORY_COLUMNS = ("t", "I", "Y", "F", "M", "regime")
THRESHOLD_COLUMNS = ("alpha", "yp_star", "yp_dstar", "yp_dstar_tilde", "tangency_I")
BIFURCATION_COLUMNS = ("yp", "label", "yf_value", "stability")
BASIN_COLUMNS = ("coord1", "coord2", "label")
EQUILIBRIUM_COLUMNS = ("label", "I", "Y", "F", "M", "yf", "stability", "admissible", "residual")

COLUMN_DOC = """\
CSV column schemas (numbers use 17 significant digits):
  trajectory    t, I, Y, F, M, regime   (regime: abundance | scarcity | boundary)
  thresholds    alpha, yp_star, yp_dstar, yp_dstar_tilde, tangency_I   (nan on failed rows)
  bifurcation   yp, label, yf_value, stability
  basins        coord1, coord2, label   (label: TE, EE_sharp, EE_MD2, EE_star, Nonconvergent)
  equilibria    label, I, Y, F, M, yf, stability, admissible, residual
  bounds        ic, holds, max_excess, violation_t, violation_component
"""


def fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def trajectory_rows(p: ModelParameters, c: ControlSettings, times, states):
    for t, s in zip(times, states):
        yield (float(t), *map(float, s), classify_regime(p, c, s).value)


def write_trajectory(path, p, c, traj) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(p, c, traj.times, traj.states))


def write_thresholds(path, reports) -> Path:
    rows = [(r.alpha, r.yp_star, r.yp_dstar, r.yp_dstar_tilde, r.tangency_I) for r in reports]
    return write_csv(path, THRESHOLD_COLUMNS, rows)


def write_bifurcation(path, curve) -> Path:
    return write_csv(path, BIFURCATION_COLUMNS, curve.rows)


def write_basins(path, grid) -> Path:
    rows = zip(grid.X.ravel(), grid.Y.ravel(), grid.labels.ravel())
    return write_csv(path, BASIN_COLUMNS, rows)


def write_equilibria(path, catalog) -> Path:
    rows = [(e.label, *e.as_array(), e.yf, e.stability.value, e.admissible, e.residual)
            for e in catalog.equilibria]
    return write_csv(path, EQUILIBRIUM_COLUMNS, rows)


__all__ = [
    "COLUMN_DOC", "fmt", "write_csv", "read_csv", "write_trajectory", "write_thresholds",
    "write_bifurcation", "write_basins", "write_equilibria",
]
