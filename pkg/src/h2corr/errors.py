"""Exception hierarchy shared by the numerical modules and the command line."""


class H2CorrError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(H2CorrError, ValueError):
    """Invalid configuration, schedule or grid specification."""


class ScheduleMismatchError(ConfigurationError):
    """Two artifacts were produced with different corrugation schedules."""


class NumericError(H2CorrError, ArithmeticError):
    """A numerical precondition or consistency requirement failed."""


class DomainError(NumericError, ValueError):
    """Argument outside the domain of a function."""


class SingularityError(DomainError):
    """Evaluation at a point where the object blows up."""


class ResolutionError(NumericError):
    """The grid does not resolve a corrugation layer."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class ConeViolationError(NumericError):
    """A metric defect left the positive cone at some node."""


class ImmersionLossError(NumericError):
    """A differential is (numerically) degenerate."""


class ConsistencyError(NumericError):
    """An internal exactness check failed."""


class BudgetExceededError(NumericError):
    """The corrugation number search hit its cap."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class VerificationFailure(H2CorrError):
    """At least one acceptance criterion failed."""


class ArtifactError(H2CorrError):
    """Run artifacts are missing, locked or fail their checksum."""
