"""Simulation-level experiments built on the catalog and the integrator.

Attractor classification uses a dwell rule: a run is labelled with a catalog
equilibrium once it has stayed within ``1e-3 * max(|e|_inf, K)`` of it for 50
simulated days. The ``K`` floor gives TE a usable neighbourhood (its own norm
is zero) without changing the relative tolerance for the positive points,
whose largest coordinate is of order ``K`` anyway.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .equilibria import CatalogReport, Stability, endemic_equilibrium, equilibrium_catalog
from .exceptions import MatdynError
from .integrate import FAILED, SolverOptions, integrate_batch
from .model import ControlSettings, ModelParameters, Variant

__all__ = [
    "NONCONVERGENT",
    "DWELL_DAYS",
    "CLOSENESS",
    "AttractorResult",
    "GridSpec",
    "BasinGrid",
    "BifurcationCurve",
    "BoundReport",
    "classify_attractor",
    "classify_many",
    "basin_grid",
    "grid_states",
    "bifurcation_curve",
    "verify_comparison_bound",
    "comparison_census",
]

NONCONVERGENT = "Nonconvergent"
DWELL_DAYS = 50.0
CLOSENESS = 1e-3
EXACT = 1e-9
AXES = ("I", "Y", "F", "M", "Y+F")


@dataclass
class AttractorResult:
    labels: list
    times: np.ndarray
    final_states: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _candidates(p, catalog: CatalogReport):
    pts = [e for e in catalog.equilibria if e.admissible]
    states = np.array([e.as_array() for e in pts]).reshape(-1, 4)
    tol = CLOSENESS * np.maximum(np.abs(states).max(axis=1, initial=0.0), p.K)
    # unstable points are only matched at t=0; a transient passing near a
    # saddle must not be mistaken for convergence
    attracting = np.array([e.stability is not Stability.UNSTABLE for e in pts], dtype=bool)
    return [e.label for e in pts], states, tol, attracting


def classify_many(p: ModelParameters, c: ControlSettings, S0,
                  opts: Optional[SolverOptions] = None,
                  catalog: Optional[CatalogReport] = None) -> AttractorResult:
    """Attractor label for every row of ``S0`` under the full control model."""
    opts = opts or SolverOptions()
    catalog = catalog or equilibrium_catalog(p, c)
    labels, E, tol, attracting = _candidates(p, catalog)
    S0 = np.atleast_2d(np.asarray(S0, dtype=float))
    n = len(S0)
    out = [NONCONVERGENT] * n
    times = np.full(n, np.nan)
    finals = S0.copy()
    diag = {}

    def nearest(y, mask, tol=tol):
        # index of the closest candidate within tolerance, -1 otherwise
        dist = np.abs(y[:, None, :] - E[None, :, :]).max(axis=2)
        ok = (dist <= tol[None, :]) & mask[None, :]
        dist = np.where(ok, dist / tol[None, :], np.inf)
        k = np.argmin(dist, axis=1) if len(E) else np.zeros(len(y), dtype=int)
        return np.where(np.isfinite(dist.min(axis=1, initial=np.inf)), k, -1)

    if len(E):
        # an initial state sitting on an equilibrium keeps its label at t=0;
        # merely nearby states are integrated like any other
        start = nearest(S0, np.ones(len(E), dtype=bool), tol * (EXACT / CLOSENESS))
    else:
        start = np.full(n, -1)
    immediate = start >= 0
    for r in np.flatnonzero(immediate):
        out[r] = labels[start[r]]
        times[r] = 0.0
    todo = np.flatnonzero(~immediate)
    if todo.size == 0 or not attracting.any():
        return AttractorResult(out, times, finals, diag)

    near = np.full(n, -1)
    since = np.zeros(n)

    def monitor(rows, t, y):
        k = nearest(y, attracting)
        changed = k != near[rows]
        since[rows[changed]] = t[changed]
        near[rows] = k
        return (k >= 0) & (t - since[rows] >= DWELL_DAYS)

    variant = Variant.FULL_CONTROL
    try:
        res = integrate_batch(variant, p, c, S0[todo], opts, monitor=_Remap(monitor, todo))
    except (MatdynError, ArithmeticError, np.linalg.LinAlgError) as exc:
        for r in todo:
            diag[int(r)] = f"{type(exc).__name__}: {exc}"
        return AttractorResult(out, times, finals, diag)
    finals[todo] = res.y
    for j, r in enumerate(todo):
        if res.status[j] == FAILED:
            diag[int(r)] = res.messages.get(j, "integration failed")
        elif near[r] >= 0 and res.t[j] - since[r] >= DWELL_DAYS:
            out[r] = labels[near[r]]
            times[r] = res.t[j]
    return AttractorResult(out, times, finals, diag)


class _Remap:
    """Translate batch-local row indices to positions in the caller's array."""

    def __init__(self, fn, rows):
        self.fn, self.rows = fn, rows

    def __call__(self, local, t, y):
        return self.fn(self.rows[local], t, y)


def classify_attractor(p: ModelParameters, c: ControlSettings, s0,
                       opts: Optional[SolverOptions] = None,
                       catalog: Optional[CatalogReport] = None) -> str:
    """Label of the catalog equilibrium the run from ``s0`` settles on.

    Returns ``"Nonconvergent"`` if no equilibrium holds the state for the
    dwell time before ``opts.t_end`` or the integration fails.
    """
    return classify_many(p, c, np.asarray(s0, dtype=float)[None, :], opts, catalog).labels[0]


@dataclass(frozen=True)
class GridSpec:
    """Two varied coordinates on a regular grid; the rest come from ``fixed``.

    With ``"Y+F"`` on an axis the value is split between Y and F at the EE*
    ratio, and (unless ``I`` is the other axis) ``I`` is set to
    ``I*/(Y*+F*)`` times the total.
    """
    x_axis: str = "M"
    y_axis: str = "Y+F"
    x_range: tuple = (0.0, 30.0)
    y_range: tuple = (0.0, 30.0)
    nx: int = 50
    ny: int = 50
    fixed: tuple = (("I", 0.0), ("Y", 0.0), ("F", 0.0), ("M", 0.0))

    def __post_init__(self):
        for ax in (self.x_axis, self.y_axis):
            if ax not in AXES:
                raise ValueError(f"axis must be one of {AXES}, got {ax!r}")
        if self.x_axis == self.y_axis:
            raise ValueError("the two axes must differ")
        if "Y+F" in (self.x_axis, self.y_axis) and {self.x_axis, self.y_axis} & {"Y", "F"}:
            raise ValueError("'Y+F' cannot be combined with 'Y' or 'F'")
        if self.nx < 1 or self.ny < 1 or self.nx * self.ny > 10**6:
            raise ValueError("resolution must satisfy 1 <= nx*ny <= 1e6")
        for lo, hi in (self.x_range, self.y_range):
            if not (0 <= lo <= hi and np.isfinite(hi)):
                raise ValueError("ranges must satisfy 0 <= lo <= hi")


_INDEX = {"I": 0, "Y": 1, "F": 2, "M": 3}


def grid_states(p: ModelParameters, spec: GridSpec):
    """Cell coordinates ``(X, Y)`` (each ``(ny, nx)``) and the states ``(ny*nx, 4)``."""
    xs = np.linspace(*spec.x_range, spec.nx)
    ys = np.linspace(*spec.y_range, spec.ny)
    X, Yg = np.meshgrid(xs, ys)
    S = np.tile([dict(spec.fixed).get(k, 0.0) for k in "IYFM"], (X.size, 1)).astype(float)
    ee = endemic_equilibrium(p).as_array()
    total = ee[1] + ee[2]
    for axis, vals in ((spec.x_axis, X.ravel()), (spec.y_axis, Yg.ravel())):
        if axis == "Y+F":
            S[:, 1] = vals * ee[1] / total
            S[:, 2] = vals * ee[2] / total
            if "I" not in (spec.x_axis, spec.y_axis):
                S[:, 0] = vals * ee[0] / total
        else:
            S[:, _INDEX[axis]] = vals
    return X, Yg, S


@dataclass
class BasinGrid:
    spec: GridSpec
    control: ControlSettings
    X: np.ndarray
    Y: np.ndarray
    labels: np.ndarray

    @property
    def counts(self) -> dict:
        names, k = np.unique(self.labels, return_counts=True)
        return {str(a): int(b) for a, b in zip(names, k)}

    @property
    def nonconvergent_fraction(self) -> float:
        return float(np.mean(self.labels == NONCONVERGENT))

    def count(self, label: str) -> int:
        return int(np.sum(self.labels == label))


def _classify_chunk(args):
    p, c, S, opts, catalog = args
    return classify_many(p, c, S, opts, catalog).labels


def basin_grid(p: ModelParameters, c: ControlSettings, spec: Optional[GridSpec] = None,
               opts: Optional[SolverOptions] = None, workers: int = 1) -> BasinGrid:
    """Classify every cell of the grid. Cells are processed as vectorised
    chunks; with ``workers > 1`` the chunks go to a process pool and are
    merged back by cell index."""
    spec = spec or GridSpec()
    opts = opts or SolverOptions()
    catalog = equilibrium_catalog(p, c)
    X, Yg, S = grid_states(p, spec)
    if workers > 1 and len(S) > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(np.arange(len(S)), workers)
        jobs = [(p, c, S[ix], opts, catalog) for ix in chunks if ix.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_classify_chunk, jobs))
        labels = [lab for part in parts for lab in part]
    else:
        labels = _classify_chunk((p, c, S, opts, catalog))
    return BasinGrid(spec, c, X, Yg, np.asarray(labels, dtype=object).reshape(X.shape))


@dataclass
class BifurcationCurve:
    alpha: float
    rows: list          # (yp, label, yf, stability)
    yp_star: Optional[float] = None
    yp_dstar: Optional[float] = None

    def at(self, yp: float) -> list:
        return [r for r in self.rows if r[0] == yp]


def bifurcation_curve(p: ModelParameters, alpha: float, yp_grid: Sequence[float]) -> BifurcationCurve:
    """(Y+F) of every admissible catalog equilibrium at each lure strength."""
    grid = np.asarray(yp_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("yp_grid must be nonnegative and strictly ascending")
    rows, ys, yd = [], None, None
    for yp in grid:
        cat = equilibrium_catalog(p, ControlSettings(float(yp), alpha))
        ys, yd = cat.yp_star, cat.yp_dstar
        for e in cat.equilibria:
            if e.admissible:
                rows.append((float(yp), e.label, e.yf, e.stability.value))
    return BifurcationCurve(float(alpha), rows, ys, yd)


@dataclass
class BoundReport:
    holds: bool
    max_excess: float
    first_violation: Optional[tuple]     # (time, component index)
    times: np.ndarray
    full: np.ndarray
    auxiliary: np.ndarray


BOUND_TOL = 1e-6


def comparison_census(p: ModelParameters, c: ControlSettings, S0, t_end: float = 2000.0,
                      n_samples: int = 2001, opts: Optional[SolverOptions] = None) -> list:
    """:class:`BoundReport` for each row of ``S0`` (batched integrations)."""
    S0 = np.atleast_2d(np.asarray(S0, dtype=float))
    if np.any(S0 < 0):
        raise ValueError("initial states must be nonnegative")
    if not c.Y_P > 0:
        raise ValueError("the auxiliary system needs Y_P > 0")
    opts = opts or SolverOptions(rel_tol=1e-10, abs_tol=1e-10, t_end=t_end, h_max=10.0)
    te = np.linspace(0.0, t_end, n_samples)
    full = integrate_batch(Variant.FULL_CONTROL, p, c, S0, opts, t_eval=te)
    aux = integrate_batch(Variant.AUXILIARY_MONOTONE, p, c, S0, opts, t_eval=te)
    reports = []
    for k in range(len(S0)):
        a, b = full.samples[k], aux.samples[k]
        if full.status[k] == FAILED or aux.status[k] == FAILED:
            raise MatdynError(full.messages.get(k) or aux.messages.get(k))
        slack = BOUND_TOL * (1.0 + np.maximum(np.abs(a).max(axis=1), np.abs(b).max(axis=1)))
        excess = a - b - slack[:, None]
        bad = np.argwhere(excess > 0)
        first = None
        if len(bad):
            i, comp = bad[0]
            first = (float(te[i]), int(comp))
        reports.append(BoundReport(first is None, float(np.max(a - b)), first, te, a, b))
    return reports


def verify_comparison_bound(p: ModelParameters, c: ControlSettings, s0,
                            t_end: float = 2000.0, n_samples: int = 2001) -> BoundReport:
    """Check full-model solution <= auxiliary solution componentwise on a
    shared time grid, with slack ``1e-6 * (1 + |state|_inf)``."""
    return comparison_census(p, c, np.asarray(s0, dtype=float)[None, :], t_end, n_samples)[0]
