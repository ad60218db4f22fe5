"""Exception hierarchy for matdyn."""


class MatdynError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParametersError(MatdynError, ValueError):
    """One or more model parameters violate their invariants.

    The individual violations are available as ``errors``.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SingularStateError(MatdynError, ZeroDivisionError):
    """A state where ``Y + Y_P = 0`` was passed to a control Jacobian."""


class NoPositiveEquilibrium(MatdynError):
    """The requested positive equilibrium does not exist for these parameters."""


class NoThreshold(MatdynError):
    """A control threshold is undefined (assumptions violated or flat profile)."""


class IntegrationError(MatdynError):
    """Base class for integrator failures.

    ``trajectory`` holds whatever was computed before the failure, if any.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StiffnessError(IntegrationError):
    """Step size fell below ``h_min`` or Newton failed to converge."""


class InstabilityError(IntegrationError):
    """The explicit reference integrator diverged."""


class ConfigError(MatdynError):
    """Configuration file could not be parsed or failed schema validation."""
