"""Lure thresholds Y_P*, Y_P** and their auxiliary-system counterpart.

Y_P** is where the line ``eta(Y_P, .)`` touches the cubic ``psi`` on the
admissible interval. Because ``eta`` is linear in ``Y_P``, a root exists for
a given ``Y_P`` exactly when ``Y_P <= max_I psi(I) / (eta_coef * b * (1 - I/K))``,
so the threshold is found by a 1-D maximisation. A two-variable Newton solve
of the tangency conditions is run from the optimum as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import golden_section_max
from .equilibria import CubicStructure, check_assumptions, cubic_structure, endemic_equilibrium
from .exceptions import NoPositiveEquilibrium, NoThreshold
from .model import ControlSettings, ModelParameters
from .offspring import basic_offspring_number

__all__ = [
    "ThresholdReport",
    "yp_star",
    "yp_star_expanded",
    "yp_double_star",
    "tangency_newton",
    "lure_ratio",
    "threshold_sweep",
]

SCAN_POINTS = 4096
ENDPOINT_MARGIN = 1e-9
NEWTON_AGREEMENT = 1e-8


def yp_star(p: ModelParameters, alpha: float) -> float:
    """Smallest lure strength that moves the female equilibrium.

    Raises
    ------
    NoThreshold
        If N0 <= 1 or males are not abundant at the endemic equilibrium.
    """
    try:
        ee = endemic_equilibrium(p)
    except NoPositiveEquilibrium as exc:
        raise NoThreshold(str(exc)) from exc
    _, Y, _, M = ee.state
    if not p.gamma * M > Y:
        raise NoThreshold("no male abundance at the endemic equilibrium")
    return (p.gamma * M - Y) / (1 + alpha / p.mu_M)


def yp_star_expanded(p: ModelParameters, alpha: float) -> float:
    """Same threshold written directly in the rates (no equilibrium values)."""
    n0 = basic_offspring_number(p)
    bracket = (p.gamma * (1 - p.r) * p.nu_I
               - p.r * p.nu_I * (p.delta + p.mu_F) * p.mu_M / p.denominator)
    return bracket * (1 - 1 / n0) * p.K / (p.mu_M + alpha)


def lure_ratio(cs: CubicStructure, I, tilde: bool = False):
    """Lure strength whose line passes through ``(I, psi(I))``."""
    I = np.asarray(I, dtype=float)
    return cs.cubic(tilde)(I) / (cs.eta_coef * cs.b * (1 - I / cs.K))


def tangency_newton(cs: CubicStructure, I0: float, Y0: float, tilde: bool = False,
                    tol: float = 1e-13, max_iter: int = 50):
    """Solve ``psi(I) = eta(Y_P, I)``, ``psi'(I) = d eta/dI`` for ``(I, Y_P)``.

    Plain Newton in two variables, started at ``(I0, Y0)``.
    """
    poly = cs.poly(tilde)
    d1, d2 = poly.deriv(1), poly.deriv(2)
    a = cs.eta_coef * cs.b
    I, Y = float(I0), float(Y0)
    for _ in range(max_iter):
        F1 = poly(I) - a * (1 - I / cs.K) * Y
        F2 = d1(I) + a / cs.K * Y
        J = np.array([[d1(I) + a / cs.K * Y, -a * (1 - I / cs.K)],
                      [d2(I), a / cs.K]])
        dI, dY = np.linalg.solve(J, [-F1, -F2])
        I += dI
        Y += dY
        if abs(dI) <= tol * max(1.0, abs(I)) and abs(dY) <= tol * max(1.0, abs(Y)):
            return I, Y
    raise NoThreshold("Newton tangency solve did not converge")


def yp_double_star(p: ModelParameters, alpha: float, which: str = "psi"):
    """Threshold above which no positive equilibrium exists.

    ``which="psi"`` gives Y_P** for the controlled model, ``"psi_tilde"`` the
    larger threshold of the auxiliary monotone system. Returns
    ``(threshold, tangency_I)``.
    """
    if which not in ("psi", "psi_tilde"):
        raise ValueError(f"which must be 'psi' or 'psi_tilde', got {which!r}")
    tilde = which == "psi_tilde"
    assumptions = check_assumptions(p)
    if not assumptions.both_hold:
        raise NoThreshold("requires N0 > 1 and male abundance at the endemic equilibrium")
    cs = cubic_structure(p, ControlSettings(0.0, alpha))
    upper = cs.upper(tilde)
    if not 0 < upper < p.K:
        raise NoThreshold(f"admissible interval (0, {upper:.6g}) is empty or exceeds K")

    margin = ENDPOINT_MARGIN * upper
    grid = np.linspace(margin, upper - margin, SCAN_POINTS)
    ratio = lure_ratio(cs, grid, tilde)
    k = int(np.argmax(ratio))
    if k in (0, SCAN_POINTS - 1) or not ratio[k] > 0:
        raise NoThreshold("lure-ratio profile has no interior maximum")
    I_max, Y_max = golden_section_max(lambda x: float(lure_ratio(cs, x, tilde)),
                                      grid[k - 1], grid[k + 1], rel_tol=1e-10)

    I_n, Y_n = tangency_newton(cs, I_max, Y_max, tilde)
    if abs(Y_n - Y_max) > NEWTON_AGREEMENT * Y_max:
        raise NoThreshold(
            f"ratio maximum {Y_max!r} and Newton tangency {Y_n!r} disagree")
    return float(Y_max), float(I_max)


@dataclass
class ThresholdReport:
    alpha: float
    yp_star: Optional[float] = None
    yp_dstar: Optional[float] = None
    yp_dstar_tilde: Optional[float] = None
    tangency_I: Optional[float] = None
    tangency_I_tilde: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _sweep_row(p: ModelParameters, alpha: float) -> ThresholdReport:
    row = ThresholdReport(alpha=float(alpha))
    try:
        row.yp_star = yp_star(p, alpha)
        row.yp_dstar, row.tangency_I = yp_double_star(p, alpha, "psi")
        row.yp_dstar_tilde, row.tangency_I_tilde = yp_double_star(p, alpha, "psi_tilde")
    except (NoThreshold, ArithmeticError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def threshold_sweep(p: ModelParameters, alpha_grid, workers: int = 1) -> list:
    """One :class:`ThresholdReport` per trapping rate; failed rows carry ``error``."""
    alphas = [float(a) for a in alpha_grid]
    for a in alphas:
        if not (np.isfinite(a) and a >= 0):
            raise ValueError(f"alpha grid values must be finite and >= 0, got {a}")
    if workers > 1 and len(alphas) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, [p] * len(alphas), alphas))
    return [_sweep_row(p, a) for a in alphas]
