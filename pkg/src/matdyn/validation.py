"""Input validation shared by the estimator and the public entry points."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .model import ControlSettings, ModelParameters, validate_params

STATE_DIM = 4


def check_states(X, name: str = "X") -> np.ndarray:
    """Return ``X`` as a float ``(n, 4)`` array of finite, nonnegative states."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, input_name=name)
    if X.shape[1] != STATE_DIM:
        raise ValueError(f"{name} must have {STATE_DIM} columns (I, Y, F, M), got {X.shape[1]}")
    if np.any(X < 0):
        raise ValueError(f"{name} must be nonnegative")
    return X


def check_parameters(**values) -> ModelParameters:
    """Build and strictly validate a parameter set from keyword values."""
    return validate_params(ModelParameters(**values))


def check_control(Y_P, alpha) -> ControlSettings:
    return ControlSettings(float(Y_P), float(alpha))
