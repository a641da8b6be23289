"""Numerical corrugation of the hyperbolic plane into Euclidean space.

The holonomic process builds the maps f_{k,i}; the formal process evaluates
their pointwise analogue Phi_{k,i} and its normal patterns in closed form.
"""
from .errors import (ArtifactError, BudgetExceededError, ConeViolationError, ConfigurationError,
                     ConsistencyError, DomainError, H2CorrError, ImmersionLossError, NumericError,
                     ResolutionError, ScheduleMismatchError, SingularityError, VerificationFailure)
from .schedule import Schedule, desk_schedule, pattern_schedule
from .specfun import KAPPA0, SIGMA, bessel_j0, bessel_j0_inv

__version__ = "0.1.0"
