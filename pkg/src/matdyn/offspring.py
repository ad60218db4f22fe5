"""Basic offspring numbers: closed forms and the next-generation construction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParameters

__all__ = [
    "ReproductionReport",
    "basic_offspring_number",
    "scarcity_offspring_number",
    "next_generation_matrices",
    "next_generation_offspring_number",
    "reproduction_report",
]


def basic_offspring_number(p: ModelParameters) -> float:
    """Offspring number of the male-abundance system."""
    return p.b * p.r * p.nu_I * p.nu_Y / ((p.mu_I + p.nu_I) * p.denominator)


def scarcity_offspring_number(p: ModelParameters) -> float:
    """Offspring number of the decoupled male-scarcity system ``(I, F, M)``."""
    return (p.b * p.gamma * (1 - p.r) * p.nu_I * p.nu_Y
            / ((p.nu_I + p.mu_I) * (p.delta + p.mu_F) * p.mu_M))


def next_generation_matrices(p: ModelParameters):
    """Recruitment ``R`` and transfer ``T`` Jacobians at the trivial equilibrium."""
    R = np.zeros((4, 4))
    R[0, 2] = p.b
    T = np.array([
        [p.nu_I + p.mu_I, 0.0, 0.0, 0.0],
        [p.r * p.nu_I, p.nu_Y + p.mu_Y, -p.delta, 0.0],
        [0.0, -p.nu_Y, p.delta + p.mu_F, 0.0],
        [(1 - p.r) * p.nu_I, 0.0, 0.0, p.mu_M],
    ])
    return R, T


def next_generation_offspring_number(p: ModelParameters):
    """Spectral radius of ``R T^-1``; returns ``(rho, R, T)``.

    The radius is taken from a dense eigen-solve of the 4x4 product. Since
    ``R`` has rank one, the only nonzero eigenvalue is also ``(R T^-1)[0, 0]``;
    the two are compared as an internal consistency check.
    """
    R, T = next_generation_matrices(p)
    det = np.linalg.det(T)
    if not np.isfinite(det) or abs(det) <= 1e-300 or np.linalg.cond(T) > 1e14:
        raise np.linalg.LinAlgError("transfer matrix T is singular")
    # R T^-1 without forming the inverse
    ngm = np.linalg.solve(T.T, R.T).T
    rho = float(np.max(np.abs(np.linalg.eigvals(ngm))))
    rank_one = float(ngm[0, 0])
    if not np.isclose(rho, abs(rank_one), rtol=1e-9, atol=1e-300):
        raise ArithmeticError(
            f"eigen-solve radius {rho!r} disagrees with rank-one value {rank_one!r}")
    return rho, R, T


@dataclass
class ReproductionReport:
    N0: float
    N0_hat: float
    N0_ngm: float
    R_matrix: np.ndarray
    T_matrix: np.ndarray


def reproduction_report(p: ModelParameters) -> ReproductionReport:
    rho, R, T = next_generation_offspring_number(p)
    return ReproductionReport(
        N0=basic_offspring_number(p),
        N0_hat=scarcity_offspring_number(p),
        N0_ngm=rho,
        R_matrix=R,
        T_matrix=T,
    )
