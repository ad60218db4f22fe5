"""Estimator-style wrapper around the analysis pipeline.

``fit`` takes no data: it runs the deterministic analysis for the configured
parameters (offspring numbers, equilibrium catalog, thresholds). ``predict``
and ``transform`` then act on initial states, returning the attractor each
one settles on and that attractor's state.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .equilibria import equilibrium_catalog
from .exceptions import NoThreshold
from .integrate import SolverOptions
from .offspring import reproduction_report
from .phase import NONCONVERGENT, classify_many
from .thresholds import ThresholdReport, yp_double_star, yp_star
from .validation import check_control, check_parameters, check_states

_DEFAULTS = check_parameters()


class PestControlModel(BaseEstimator):
    """Population model under mating disruption (``Y_P``) and trapping (``alpha``).

    Biological rates default to the fruit-fly values. After ``fit``:

    ``params_``, ``control_``
        Validated parameter and control objects.
    ``reproduction_``
        Offspring numbers (closed forms and next-generation cross-check).
    ``catalog_``
        Equilibrium catalog for the configured control.
    ``thresholds_``
        Y_P* and Y_P** for the configured ``alpha``; ``None`` fields where
        the thresholds are undefined.
    """

    def __init__(self, Y_P=0.0, alpha=0.0, b=_DEFAULTS.b, r=_DEFAULTS.r, K=_DEFAULTS.K,
                 gamma=_DEFAULTS.gamma, mu_I=_DEFAULTS.mu_I, mu_Y=_DEFAULTS.mu_Y,
                 mu_F=_DEFAULTS.mu_F, mu_M=_DEFAULTS.mu_M, nu_I=_DEFAULTS.nu_I,
                 nu_Y=_DEFAULTS.nu_Y, delta=_DEFAULTS.delta, t_end=2000.0,
                 rel_tol=1e-8, abs_tol=1e-10):
        self.Y_P = Y_P
        self.alpha = alpha
        self.b = b
        self.r = r
        self.K = K
        self.gamma = gamma
        self.mu_I = mu_I
        self.mu_Y = mu_Y
        self.mu_F = mu_F
        self.mu_M = mu_M
        self.nu_I = nu_I
        self.nu_Y = nu_Y
        self.delta = delta
        self.t_end = t_end
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol

    def _param_values(self) -> dict:
        names = ("b", "r", "K", "gamma", "mu_I", "mu_Y", "mu_F", "mu_M", "nu_I", "nu_Y", "delta")
        return {k: getattr(self, k) for k in names}

    def fit(self, X=None, y=None):
        """Run the analysis; ``X`` and ``y`` are accepted for API symmetry and ignored."""
        self.params_ = check_parameters(**self._param_values())
        self.control_ = check_control(self.Y_P, self.alpha)
        self.solver_ = SolverOptions(rel_tol=self.rel_tol, abs_tol=self.abs_tol, t_end=self.t_end)
        self.reproduction_ = reproduction_report(self.params_)
        self.catalog_ = equilibrium_catalog(self.params_, self.control_)
        th = ThresholdReport(alpha=float(self.alpha))
        try:
            th.yp_star = yp_star(self.params_, self.alpha)
            th.yp_dstar, th.tangency_I = yp_double_star(self.params_, self.alpha)
        except NoThreshold as exc:
            th.error = str(exc)
        self.thresholds_ = th
        self.n_features_in_ = 4
        return self

    def _classify(self, X):
        check_is_fitted(self, "catalog_")
        X = check_states(X)
        return classify_many(self.params_, self.control_, X, self.solver_, self.catalog_)

    def predict(self, X) -> np.ndarray:
        """Attractor label for each initial state (row ``(I, Y, F, M)``)."""
        return np.asarray(self._classify(X).labels, dtype=object)

    def transform(self, X) -> np.ndarray:
        """State of the attractor reached from each row; NaN when nonconvergent."""
        labels = self.predict(X)
        out = np.full((len(labels), 4), np.nan)
        for k, lab in enumerate(labels):
            if lab != NONCONVERGENT:
                out[k] = self.catalog_.get(lab).as_array()
        return out

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).predict(X)

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).transform(X)
