"""Equilibria of every system variant, their stability, and the full catalog.

Closed forms cover the trivial, endemic, scarcity and trapping-only
equilibria. Equilibria in the male-scarcity region under control are the
intersections of a cubic ``psi(I) = I * xi(I) * phi(I)`` with the line
``eta(Y_P, I)``; they are located by dense bracketing followed by Brent
refinement and then lifted back to full states.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._numerics import golden_section_max
from .exceptions import NoPositiveEquilibrium, NoThreshold, SingularStateError
from .model import (
    NO_CONTROL,
    ControlSettings,
    ModelParameters,
    PopulationState,
    Regime,
    Variant,
    classify_regime,
    jacobian,
    rhs,
)
from .offspring import basic_offspring_number, scarcity_offspring_number

__all__ = [
    "Stability",
    "EquilibriumPoint",
    "AssumptionReport",
    "CubicStructure",
    "CatalogReport",
    "trivial_equilibrium",
    "endemic_equilibrium",
    "scarcity_equilibrium",
    "check_assumptions",
    "abundance_control_equilibrium",
    "cubic_structure",
    "md_equilibria",
    "tilde_equilibria",
    "classify_stability",
    "stability_spectrum",
    "equilibrium_catalog",
]

ROOT_GRID = 2048
STABILITY_TOL = 1e-9
TANGENCY_MERGE = 1e-6


class Stability(enum.Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically_stable"
    UNSTABLE = "unstable"
    NOT_CLASSIFIED = "not_classified"


@dataclass
class EquilibriumPoint:
    label: str
    state: PopulationState
    region: Regime
    stability: Stability
    residual: float
    variant: Variant
    eigenvalues: Optional[np.ndarray] = None
    admissible: bool = True
    flags: dict = field(default_factory=dict)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.state, dtype=float)

    @property
    def yf(self) -> float:
        """Total adult females ``Y + F``."""
        return self.state.Y + self.state.F


def stability_spectrum(variant: Variant, p: ModelParameters, c: Optional[ControlSettings],
                       state, tol: float = STABILITY_TOL):
    """Return ``(Stability, eigenvalues)`` from the Jacobian spectrum at ``state``.

    Real parts all below ``-tol`` mean stable, any above ``tol`` unstable;
    anything else, or a failed eigen-solve, is not classified.
    """
    try:
        J = jacobian(variant, p, c, np.asarray(state, dtype=float))
        eig = np.linalg.eigvals(J)
    except (np.linalg.LinAlgError, SingularStateError, ValueError):
        return Stability.NOT_CLASSIFIED, None
    if not np.all(np.isfinite(eig)):
        return Stability.NOT_CLASSIFIED, eig
    re = eig.real
    if np.all(re < -tol):
        return Stability.ASYMPTOTICALLY_STABLE, eig
    if np.any(re > tol):
        return Stability.UNSTABLE, eig
    return Stability.NOT_CLASSIFIED, eig


def classify_stability(variant: Variant, p: ModelParameters, c: Optional[ControlSettings],
                       eq: EquilibriumPoint) -> Stability:
    return stability_spectrum(variant, p, c, eq.state)[0]


def _point(label, state, variant, p, c, admissible=True, **flags) -> EquilibriumPoint:
    state = PopulationState(*map(float, state))
    residual = float(np.max(np.abs(rhs(variant, p, c, state))))
    stability, eig = stability_spectrum(variant, p, c, state)
    return EquilibriumPoint(
        label=label,
        state=state,
        region=classify_regime(p, c, state),
        stability=stability,
        residual=residual,
        variant=variant,
        eigenvalues=eig,
        admissible=admissible,
        flags=dict(flags),
    )


def _default_variant(c: Optional[ControlSettings]) -> Variant:
    return Variant.FULL_CONTROL if c is not None else Variant.FULL_NO_CONTROL


def trivial_equilibrium(p: Optional[ModelParameters] = None,
                        c: Optional[ControlSettings] = None) -> EquilibriumPoint:
    """The extinction state. Stability is only classified when ``p`` is given."""
    zero = PopulationState(0.0, 0.0, 0.0, 0.0)
    if p is None:
        return EquilibriumPoint("TE", zero, Regime.BOUNDARY, Stability.NOT_CLASSIFIED, 0.0,
                                _default_variant(c))
    return _point("TE", zero, _default_variant(c), p, c)


def _endemic_coefficients(p: ModelParameters):
    """Y*, F*, M* as multiples of I*."""
    D = p.denominator
    return (p.r * p.nu_I * (p.delta + p.mu_F) / D,
            p.r * p.nu_I * p.nu_Y / D,
            (1 - p.r) * p.nu_I / p.mu_M)


def endemic_equilibrium(p: ModelParameters) -> EquilibriumPoint:
    """Positive equilibrium of the uncontrolled model (male abundance).

    Raises
    ------
    NoPositiveEquilibrium
        If the offspring number is below one.
    """
    n0 = basic_offspring_number(p)
    if n0 < 1 - 1e-12:
        raise NoPositiveEquilibrium(f"offspring number N0 = {n0:.6g} < 1")
    I = max(0.0, (1 - 1 / n0) * p.K)
    ky, kf, km = _endemic_coefficients(p)
    return _point("EE_star", (I, ky * I, kf * I, km * I), Variant.FULL_NO_CONTROL, p, None)


def scarcity_equilibrium(p: ModelParameters) -> EquilibriumPoint:
    """Positive equilibrium of the uncontrolled male-scarcity system.

    The ``Y`` component may be negative; the flag ``y_below_gamma_m`` records
    whether the equilibrium lies in the male-abundance half-space.
    """
    n0_hat = scarcity_offspring_number(p)
    if not n0_hat > 1:
        raise NoPositiveEquilibrium(f"scarcity offspring number = {n0_hat:.6g} <= 1")
    I = (1 - 1 / n0_hat) * p.K
    F = p.gamma * (1 - p.r) * p.nu_I * p.nu_Y / ((p.delta + p.mu_F) * p.mu_M) * I
    M = (1 - p.r) * p.nu_I / p.mu_M * I
    Y = ((p.r * p.nu_I * (p.delta + p.mu_F) * p.mu_M - p.nu_Y * p.gamma * (1 - p.r) * p.nu_I * p.mu_F)
         / (p.mu_Y * (p.delta + p.mu_F) * p.mu_M) * I)
    return _point("EE_hat", (I, Y, F, M), Variant.SCARCITY_NO_CONTROL, p, None,
                  y_below_gamma_m=bool(Y < p.gamma * M))


@dataclass
class AssumptionReport:
    N0_gt_1: bool
    male_abundance_at_EE: bool
    N0_hat_gt_1: bool
    Y_hat_lt_gamma_M_hat: bool

    @property
    def both_hold(self) -> bool:
        return self.N0_gt_1 and self.male_abundance_at_EE


def check_assumptions(p: ModelParameters) -> AssumptionReport:
    """Evaluate persistence (N0 > 1), male abundance at EE*, and their consequences.

    The two abundance comparisons are made on the per-immature coefficients,
    so they keep their meaning when the equilibrium itself does not exist.
    """
    ky, _, km = _endemic_coefficients(p)
    y_hat_coef = ((p.r * p.nu_I * (p.delta + p.mu_F) * p.mu_M
                   - p.nu_Y * p.gamma * (1 - p.r) * p.nu_I * p.mu_F)
                  / (p.mu_Y * (p.delta + p.mu_F) * p.mu_M))
    return AssumptionReport(
        N0_gt_1=basic_offspring_number(p) > 1,
        male_abundance_at_EE=ky < p.gamma * km,
        N0_hat_gt_1=scarcity_offspring_number(p) > 1,
        Y_hat_lt_gamma_M_hat=y_hat_coef < p.gamma * km,
    )


def abundance_control_equilibrium(p: ModelParameters, c: ControlSettings) -> EquilibriumPoint:
    """EE#: the endemic state with males reduced by trapping.

    ``admissible`` is true when EE# lies in the male-abundance region, i.e.
    when it is also an equilibrium of the full controlled model.
    """
    ee = endemic_equilibrium(p)
    I, Y, F, M = ee.state
    if c.Y_P > 0:
        M = M / (1 + c.alpha * c.Y_P / (p.mu_M * (Y + c.Y_P)))
    admissible = Y + c.Y_P < p.gamma * M
    return _point("EE_sharp", (I, Y, F, M), Variant.FULL_CONTROL, p, c, admissible=admissible)


@dataclass
class CubicStructure:
    """Linear factors of the two cubics and the line they are intersected with.

    ``psi(I) = I * xi(I) * phi(I)`` and ``psi_tilde(I) = I * xi(I) * phi_tilde(I)``,
    each factor stored as ``(value at 0, slope)``; ``eta(Y_P, I) =
    eta_coef * b * (1 - I/K) * Y_P``.
    """

    K: float
    b: float
    xi: tuple
    phi: tuple
    phi_tilde: tuple
    eta_coef: float
    I1: float
    I2: float
    I2_tilde: float

    @property
    def I_min(self) -> float:
        return min(self.I1, self.I2)

    @property
    def I_min_tilde(self) -> float:
        return self.I1

    def psi(self, I):
        I = np.asarray(I, dtype=float)
        return I * (self.xi[0] + self.xi[1] * I) * (self.phi[0] + self.phi[1] * I)

    def psi_tilde(self, I):
        I = np.asarray(I, dtype=float)
        return I * (self.xi[0] + self.xi[1] * I) * (self.phi_tilde[0] + self.phi_tilde[1] * I)

    def eta(self, Y_P, I):
        return self.eta_coef * self.b * (1 - np.asarray(I, dtype=float) / self.K) * Y_P

    def eta_slope(self, Y_P) -> float:
        """dη/dI, constant in I."""
        return -self.eta_coef * self.b / self.K * Y_P

    def poly(self, tilde: bool = False) -> np.polynomial.Polynomial:
        P = np.polynomial.Polynomial
        phi = self.phi_tilde if tilde else self.phi
        return P([0.0, 1.0]) * P(list(self.xi)) * P(list(phi))

    def cubic(self, tilde: bool = False):
        return self.psi_tilde if tilde else self.psi

    def upper(self, tilde: bool = False) -> float:
        return self.I_min_tilde if tilde else self.I_min


def cubic_structure(p: ModelParameters, c: ControlSettings) -> CubicStructure:
    c = c or NO_CONTROL
    s = p.nu_I + p.mu_I
    xi0 = p.nu_Y * p.gamma * (1 - p.r) * p.nu_I * p.b - (p.delta + p.mu_F) * s * p.mu_M
    phi0 = p.r * p.nu_I * p.b - p.mu_F * s
    phit0 = p.r * p.nu_I * p.b + p.delta * s
    return CubicStructure(
        K=p.K,
        b=p.b,
        xi=(xi0, -p.nu_Y * p.gamma * (1 - p.r) * p.nu_I * p.b / p.K),
        phi=(phi0, -p.r * p.nu_I * p.b / p.K),
        phi_tilde=(phit0, -p.r * p.nu_I * p.b / p.K),
        eta_coef=p.mu_Y * (p.delta + p.mu_F) * s * (p.mu_M + c.alpha),
        I1=p.K * (1 - (p.delta + p.mu_F) * s * p.mu_M / (p.nu_Y * p.gamma * (1 - p.r) * p.nu_I * p.b)),
        I2=p.K * (1 - p.mu_F * s / (p.r * p.nu_I * p.b)),
        I2_tilde=(1 + p.delta * s / (p.r * p.nu_I * p.b)) * p.K,
    )


def _intersections(cs: CubicStructure, Y_P: float, tilde: bool, n_grid: int = ROOT_GRID):
    """Roots of ``psi - eta`` on ``(0, upper)``, ascending; a tangency yields one root."""
    upper = cs.upper(tilde)
    if not upper > 0:
        return []
    cubic = cs.cubic(tilde)

    def g(I):
        return float(cubic(I) - cs.eta(Y_P, I))

    grid = np.linspace(0.0, upper, n_grid)
    vals = cubic(grid) - cs.eta(Y_P, grid)
    xtol = 1e-12 * upper
    roots = [float(x) for x in grid[vals == 0.0]]
    for k in np.flatnonzero(vals[:-1] * vals[1:] < 0):
        roots.append(brentq(g, grid[k], grid[k + 1], xtol=xtol, rtol=1e-15))

    if not roots:
        # both roots may fall inside one grid cell near the tangency
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
        x_top, g_top = golden_section_max(g, lo, hi, rel_tol=1e-13)
        if g_top > 0:
            roots = [brentq(g, lo, x_top, xtol=xtol, rtol=1e-15),
                     brentq(g, x_top, hi, xtol=xtol, rtol=1e-15)]
        elif g_top == 0:
            roots = [x_top]

    roots.sort()
    merged = []
    for x in roots:
        if merged and x - merged[-1] < TANGENCY_MERGE * upper:
            merged[-1] = 0.5 * (merged[-1] + x)
        else:
            merged.append(x)
    return merged


def _lift_md(p: ModelParameters, c: ControlSettings, I: float):
    B = p.b * (1 - I / p.K)
    s = p.nu_I + p.mu_I
    Y = (p.r * p.nu_I / p.mu_Y - p.mu_F * s / (p.mu_Y * B)) * I
    F = s / B * I
    M = (1 - p.r) * p.nu_I / (p.mu_M + c.alpha * c.Y_P / (Y + c.Y_P)) * I
    return I, Y, F, M


def _lift_tilde(p: ModelParameters, c: ControlSettings, I: float):
    B = p.b * (1 - I / p.K)
    s = p.nu_I + p.mu_I
    Y = (p.r * p.nu_I + p.delta * s / B) * I / p.mu_Y
    F = s / B * I
    M = (1 - p.r) * p.nu_I / (p.mu_M + c.alpha * c.Y_P / (Y + c.Y_P)) * I
    return I, Y, F, M


def md_equilibria(p: ModelParameters, c: ControlSettings,
                  include_inadmissible: bool = False) -> list:
    """Positive equilibria of the controlled model in the male-scarcity region.

    Each root of ``psi = eta`` on ``(0, min(I1, I2))`` is lifted to a full
    state. A lifted point is admissible when ``Y > 0`` and it is not in the
    male-abundance region (``Y + Y_P >= gamma M`` up to the boundary
    tolerance); inadmissible points are dropped unless requested.
    """
    if not c.Y_P > 0:
        raise ValueError("md_equilibria requires Y_P > 0")
    cs = cubic_structure(p, c)
    roots = _intersections(cs, c.Y_P, tilde=False)
    out = []
    for k, I in enumerate(roots, start=1):
        state = _lift_md(p, c, I)
        region = classify_regime(p, c, state)
        admissible = state[1] > 0 and I < cs.I2 and region is not Regime.ABUNDANCE
        if admissible or include_inadmissible:
            label = "EE_MD" if len(roots) == 1 else f"EE_MD{k}"
            # a rejected point is still an equilibrium of the scarcity subsystem
            variant = Variant.FULL_CONTROL if admissible else Variant.SCARCITY_CONTROL
            out.append(_point(label, state, variant, p, c, admissible=admissible,
                              tangency=len(roots) == 1))
    return out


def tilde_equilibria(p: ModelParameters, c: ControlSettings) -> list:
    """Positive equilibria of the auxiliary monotone system, ordered by ``I``."""
    if not c.Y_P > 0:
        raise ValueError("tilde_equilibria requires Y_P > 0")
    cs = cubic_structure(p, c)
    roots = _intersections(cs, c.Y_P, tilde=True)
    out = []
    for k, I in enumerate(roots, start=1):
        label = "E_tilde" if len(roots) == 1 else f"E_tilde{k}"
        out.append(_point(label, _lift_tilde(p, c, I), Variant.AUXILIARY_MONOTONE, p, c,
                          tangency=len(roots) == 1))
    return out


@dataclass
class CatalogReport:
    control: ControlSettings
    equilibria: list
    case: str
    yp_star: Optional[float]
    yp_dstar: Optional[float]
    assumptions: AssumptionReport
    consistent: bool
    warnings: list = field(default_factory=list)

    def labels(self) -> set:
        return {e.label for e in self.equilibria}

    def get(self, label: str) -> Optional[EquilibriumPoint]:
        for e in self.equilibria:
            if e.label == label:
                return e
        return None

    def stable(self) -> list:
        return [e for e in self.equilibria if e.stability is Stability.ASYMPTOTICALLY_STABLE]


_EXPECTED = {
    "no_control": {"TE", "EE_star"},
    "below_yp_star": {"TE", "EE_MD1", "EE_sharp"},
    "between_thresholds": {"TE", "EE_MD1", "EE_MD2"},
    "above_yp_dstar": {"TE"},
}


def equilibrium_catalog(p: ModelParameters, c: ControlSettings) -> CatalogReport:
    """All equilibria of the full model for the given control.

    The equilibria are computed directly (closed forms plus root finding);
    the thresholds are used only to name the case and to check that the
    computed set matches the one predicted for that case.
    """
    from .thresholds import yp_double_star, yp_star

    c = c or NO_CONTROL
    notes = []
    assumptions = check_assumptions(p)
    if not assumptions.both_hold:
        notes.append("assumptions N0 > 1 and Y* < gamma M* do not both hold")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)

    ys = yd = None
    try:
        ys = yp_star(p, c.alpha)
        yd = yp_double_star(p, c.alpha)[0]
    except NoThreshold as exc:
        notes.append(f"threshold unavailable: {exc}")

    eqs = [trivial_equilibrium(p, c if c.Y_P > 0 else None)]
    if c.Y_P == 0:
        if assumptions.N0_gt_1:
            eqs.append(endemic_equilibrium(p))
        case = "no_control"
    else:
        md = md_equilibria(p, c)
        if assumptions.N0_gt_1:
            sharp = abundance_control_equilibrium(p, c)
            duplicate = any(np.allclose(sharp.as_array(), e.as_array(), rtol=1e-6) for e in md)
            if sharp.admissible and not duplicate:
                eqs.append(sharp)
        eqs.extend(md)
        if ys is None or yd is None:
            case = "unknown"
        elif c.Y_P < ys:
            case = "below_yp_star"
        elif c.Y_P < yd:
            case = "between_thresholds"
        else:
            case = "above_yp_dstar"
    labels = {e.label for e in eqs}
    consistent = labels == _EXPECTED.get(case, labels)
    return CatalogReport(control=c, equilibria=eqs, case=case, yp_star=ys, yp_dstar=yd,
                         assumptions=assumptions, consistent=consistent, warnings=notes)
