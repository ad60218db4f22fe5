"""Pest-insect population dynamics under mating disruption and trapping."""
from .equilibria import (CatalogReport, EquilibriumPoint, Stability, endemic_equilibrium,
                         equilibrium_catalog, md_equilibria, scarcity_equilibrium, tilde_equilibria,
                         trivial_equilibrium)
from .exceptions import (ConfigError, InstabilityError, IntegrationError, InvalidParametersError,
                         MatdynError, NoPositiveEquilibrium, NoThreshold, SingularStateError,
                         StiffnessError)
from .integrate import SolverOptions, Trajectory, integrate, integrate_reference
from .model import (ControlSettings, ModelParameters, PopulationState, Regime, Variant, jacobian,
                    rhs, validate_params)
from .offspring import basic_offspring_number, reproduction_report, scarcity_offspring_number
from .thresholds import threshold_sweep, yp_double_star, yp_star

from .estimator import PestControlModel

__version__ = "0.1.0"
