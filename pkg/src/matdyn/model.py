"""Parameters, states and vector fields of the pest-insect model.

The state vector is ordered ``(I, Y, F, M)``: immatures, females available
for mating, fertilised females and males.  All right-hand sides and
Jacobians in this module are vectorised over leading axes, so a batch of
states with shape ``(n, 4)`` can be evaluated in one call.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import InvalidParametersError, SingularStateError

__all__ = [
    "ModelParameters",
    "ControlSettings",
    "PopulationState",
    "Variant",
    "Regime",
    "CooperativityReport",
    "validate_params",
    "rhs",
    "jacobian",
    "regime_margin",
    "classify_regime",
    "check_cooperative",
    "sample_omega_k",
]


@dataclass(frozen=True)
class ModelParameters:
    """Biological rates and constants. Defaults are the fruit-fly values.

    Construction does not validate, so degenerate values (``b=0``,
    ``gamma=0``...) can be used for limit cases; call
    :func:`validate_params` where a strictly valid set is required.
    """

    b: float = 9.272
    r: float = 0.57
    K: float = 1000.0
    gamma: float = 4.0
    mu_I: float = 1 / 15
    mu_Y: float = 1 / 75.1
    mu_F: float = 1 / 75.1
    mu_M: float = 1 / 86.4
    nu_I: float = 1 / 24.6
    nu_Y: float = 0.5
    delta: float = 0.1

    @property
    def denominator(self) -> float:
        """``(nu_Y+mu_Y)(delta+mu_F) - delta*nu_Y``, positive for valid rates."""
        return (self.nu_Y + self.mu_Y) * (self.delta + self.mu_F) - self.delta * self.nu_Y

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ControlSettings:
    """Lure strength ``Y_P`` (equivalent wild females) and trapping rate ``alpha``."""

    Y_P: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.Y_P >= 0 and math.isfinite(self.Y_P)):
            raise ValueError(f"Y_P must be finite and >= 0, got {self.Y_P}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")


NO_CONTROL = ControlSettings()


class PopulationState(NamedTuple):
    I: float
    Y: float
    F: float
    M: float


class Variant(enum.Enum):
    FULL_NO_CONTROL = "full_no_control"
    ABUNDANCE_NO_CONTROL = "abundance_no_control"
    SCARCITY_NO_CONTROL = "scarcity_no_control"
    FULL_CONTROL = "full_control"
    ABUNDANCE_CONTROL = "abundance_control"
    SCARCITY_CONTROL = "scarcity_control"
    AUXILIARY_MONOTONE = "auxiliary_monotone"

    @property
    def uses_control(self) -> bool:
        return self in _CONTROL_VARIANTS


_CONTROL_VARIANTS = frozenset(
    {Variant.FULL_CONTROL, Variant.ABUNDANCE_CONTROL, Variant.SCARCITY_CONTROL,
     Variant.AUXILIARY_MONOTONE}
)
# variants whose equations divide by Y + Y_P outside of a min{} branch
_DIVIDING_VARIANTS = frozenset(
    {Variant.ABUNDANCE_CONTROL, Variant.SCARCITY_CONTROL, Variant.AUXILIARY_MONOTONE}
)


class Regime(enum.Enum):
    ABUNDANCE = "abundance"
    SCARCITY = "scarcity"
    BOUNDARY = "boundary"


def validate_params(p: ModelParameters) -> ModelParameters:
    """Return ``p`` unchanged if every field is positive and ``0 < r < 1``.

    Raises
    ------
    InvalidParametersError
        Listing every violated invariant.
    """
    errors = []
    for f in fields(p):
        value = getattr(p, f.name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            errors.append(f"{f.name} must be a finite number, got {value!r}")
        elif f.name == "r":
            if not 0 < value < 1:
                errors.append(f"r out of range (0, 1): {value}")
        elif value <= 0:
            errors.append(f"{f.name} must be positive, got {value}")
    if errors:
        raise InvalidParametersError(errors)
    return p


def _control(variant: Variant, c: Optional[ControlSettings]) -> ControlSettings:
    if variant.uses_control:
        if c is None:
            raise ValueError(f"{variant.value} requires ControlSettings")
        return c
    return NO_CONTROL


def _split(s):
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 4:
        raise ValueError(f"state must have 4 components (I, Y, F, M), got shape {s.shape}")
    return s, s[..., 0], s[..., 1], s[..., 2], s[..., 3]


def _trap_rate(Y, c):
    """alpha * Y_P / (Y + Y_P), zero when there is no lure."""
    if c.Y_P == 0 or c.alpha == 0:
        return np.zeros_like(Y)
    return c.alpha * c.Y_P / (Y + c.Y_P)


def _wild_fraction(Y, c):
    """Y / (Y + Y_P); identically 1 without lure (continuous extension of Y/Y)."""
    if c.Y_P == 0:
        return np.ones_like(Y)
    return Y / (Y + c.Y_P)


def _check_denominator(variant, Y, c):
    if variant in _DIVIDING_VARIANTS and np.any(Y + c.Y_P <= 0):
        raise SingularStateError(f"{variant.value} is singular at Y + Y_P = 0")


def rhs(variant: Variant, p: ModelParameters, c: Optional[ControlSettings], s) -> np.ndarray:
    """Time derivative ``(dI, dY, dF, dM)`` of ``variant`` at state(s) ``s``.

    For the full (min-switching) variants the fertilisation flux is
    evaluated in the division-safe form ``nu_Y * Y * min(gamma M, Y+Y_P)/(Y+Y_P)``,
    which is zero at ``Y = Y_P = 0``.
    """
    c = _control(variant, c)
    s, I, Y, F, M = _split(s)
    if variant in _DIVIDING_VARIANTS and c.Y_P > 0:
        _check_denominator(variant, Y, c)

    dI = p.b * (1 - I / p.K) * F - (p.nu_I + p.mu_I) * I
    trap = np.zeros_like(Y)
    if variant in (Variant.FULL_NO_CONTROL, Variant.FULL_CONTROL):
        total = Y + c.Y_P
        male_limited = (p.gamma * M < total) & (total > 0)
        safe_total = np.where(male_limited, total, 1.0)
        fert = np.where(male_limited, p.nu_Y * p.gamma * M * Y / safe_total, p.nu_Y * Y)
        if c.Y_P > 0 and c.alpha > 0:
            trap = c.alpha * c.Y_P / np.where(total > 0, total, 1.0)
    elif variant in (Variant.ABUNDANCE_NO_CONTROL, Variant.ABUNDANCE_CONTROL):
        fert = p.nu_Y * Y
        trap = _trap_rate(Y, c)
    elif variant is Variant.SCARCITY_NO_CONTROL:
        fert = p.nu_Y * p.gamma * M
    else:  # SCARCITY_CONTROL, AUXILIARY_MONOTONE
        fert = p.nu_Y * p.gamma * M * _wild_fraction(Y, c)
        trap = _trap_rate(Y, c)

    if variant is Variant.AUXILIARY_MONOTONE:
        dY = p.r * p.nu_I * I + p.delta * F - p.mu_Y * Y
    else:
        dY = p.r * p.nu_I * I - fert + p.delta * F - p.mu_Y * Y
    dF = fert - (p.delta + p.mu_F) * F
    dM = (1 - p.r) * p.nu_I * I - (p.mu_M + trap) * M
    return np.stack([dI, dY, dF, dM], axis=-1)


def jacobian(variant: Variant, p: ModelParameters, c: Optional[ControlSettings], s,
             reduced: bool = False) -> np.ndarray:
    """Analytic Jacobian of :func:`rhs`, shape ``(..., 4, 4)``.

    With ``reduced=True`` (only for ``SCARCITY_NO_CONTROL``) the 3x3 Jacobian
    of the decoupled ``(I, F, M)`` subsystem is returned instead.

    On the switching surface ``gamma M = Y + Y_P`` the full variants use the
    male-abundance branch.

    Raises
    ------
    SingularStateError
        For the lure-dependent subsystems when ``Y + Y_P = 0``.
    """
    c = _control(variant, c)
    s, I, Y, F, M = _split(s)
    if reduced and variant is not Variant.SCARCITY_NO_CONTROL:
        raise ValueError("reduced Jacobian is only defined for SCARCITY_NO_CONTROL")
    _check_denominator(variant, Y, c)

    zero = np.zeros_like(I)
    total = Y + c.Y_P
    safe_total = np.where(total > 0, total, 1.0)

    # partials of the fertilisation flux with respect to Y and M
    if variant in (Variant.FULL_NO_CONTROL, Variant.FULL_CONTROL):
        male_limited = (p.gamma * M < total) & (total > 0)
        fert_Y = np.where(male_limited, p.nu_Y * p.gamma * M * c.Y_P / safe_total**2, p.nu_Y)
        fert_M = np.where(male_limited, p.nu_Y * p.gamma * Y / safe_total, 0.0)
    elif variant in (Variant.ABUNDANCE_NO_CONTROL, Variant.ABUNDANCE_CONTROL):
        fert_Y = np.full_like(I, p.nu_Y)
        fert_M = zero
    elif variant is Variant.SCARCITY_NO_CONTROL:
        fert_Y = zero
        fert_M = np.full_like(I, p.nu_Y * p.gamma)
    else:
        if c.Y_P == 0:
            fert_Y = zero
            fert_M = np.full_like(I, p.nu_Y * p.gamma)
        else:
            fert_Y = p.nu_Y * p.gamma * M * c.Y_P / safe_total**2
            fert_M = p.nu_Y * p.gamma * Y / safe_total

    if c.Y_P > 0 and c.alpha > 0:
        trap = c.alpha * c.Y_P / safe_total
        trap_Y = c.alpha * c.Y_P * M / safe_total**2
    else:
        trap = zero
        trap_Y = zero

    J = np.zeros(I.shape + (4, 4))
    J[..., 0, 0] = -(p.nu_I + p.mu_I) - p.b * F / p.K
    J[..., 0, 2] = p.b * (1 - I / p.K)
    J[..., 1, 0] = p.r * p.nu_I
    J[..., 1, 2] = p.delta
    if variant is Variant.AUXILIARY_MONOTONE:
        J[..., 1, 1] = -p.mu_Y
    else:
        J[..., 1, 1] = -fert_Y - p.mu_Y
        J[..., 1, 3] = -fert_M
    J[..., 2, 1] = fert_Y
    J[..., 2, 2] = -(p.delta + p.mu_F)
    J[..., 2, 3] = fert_M
    J[..., 3, 0] = (1 - p.r) * p.nu_I
    J[..., 3, 1] = trap_Y
    J[..., 3, 3] = -(p.mu_M + trap)
    if reduced:
        keep = [0, 2, 3]
        return J[..., keep, :][..., :, keep]
    return J


def regime_margin(p: ModelParameters, c: Optional[ControlSettings], s) -> np.ndarray:
    """``gamma*M - (Y + Y_P)``: positive in male abundance, negative in scarcity."""
    c = c or NO_CONTROL
    _, _, Y, _, M = _split(s)
    return p.gamma * M - (Y + c.Y_P)


def classify_regime(p: ModelParameters, c: Optional[ControlSettings], s) -> Regime:
    """Which side of the surface ``gamma M = Y + Y_P`` the single state ``s`` is on.

    Differences within ``1e-9 * max(1, gamma M)`` count as the boundary.
    """
    _, _, _, _, M = _split(s)
    margin = float(regime_margin(p, c, s))
    tol = 1e-9 * max(1.0, p.gamma * float(M))
    if margin > tol:
        return Regime.ABUNDANCE
    if margin < -tol:
        return Regime.SCARCITY
    return Regime.BOUNDARY


@dataclass
class CooperativityReport:
    variant: Variant
    cooperative: bool
    n_samples: int
    n_violations: int
    min_offdiagonal: float
    counterexample: Optional[np.ndarray] = None
    counterexample_entry: Optional[tuple] = None


def check_cooperative(variant: Variant, p: ModelParameters, c: Optional[ControlSettings],
                      sample_states) -> CooperativityReport:
    """Check that every off-diagonal Jacobian entry is >= 0 at every sample.

    ``SCARCITY_NO_CONTROL`` is checked on its reduced ``(I, F, M)`` system,
    since the decoupled ``Y`` equation is not part of the cooperative system.
    """
    states = np.atleast_2d(np.asarray(sample_states, dtype=float))
    reduced = variant is Variant.SCARCITY_NO_CONTROL
    J = jacobian(variant, p, c, states, reduced=reduced)
    n = J.shape[-1]
    off = ~np.eye(n, dtype=bool)
    offdiag = J[:, off]
    bad_rows = np.flatnonzero((offdiag < 0).any(axis=1))
    report = CooperativityReport(
        variant=variant,
        cooperative=bad_rows.size == 0,
        n_samples=len(states),
        n_violations=int(bad_rows.size),
        min_offdiagonal=float(offdiag.min()) if offdiag.size else 0.0,
    )
    if bad_rows.size:
        k = bad_rows[0]
        Jk = J[k].copy()
        Jk[~off] = np.inf
        i, j = np.unravel_index(np.argmin(Jk), Jk.shape)
        report.counterexample = states[k]
        report.counterexample_entry = (int(i), int(j), float(J[k, i, j]))
    return report


def sample_omega_k(p: ModelParameters, n: int, rng=None, scale: float = 3.0) -> np.ndarray:
    """Uniform random states in ``{s >= 0 : I <= K}`` with Y, F, M up to ``scale*K``."""
    rng = np.random.default_rng(rng)
    out = rng.uniform(0.0, 1.0, size=(n, 4))
    out[:, 0] *= p.K
    out[:, 1:] *= scale * p.K
    return out
