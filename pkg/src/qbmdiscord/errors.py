"""Exception hierarchy shared by all modules."""


class QBMError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QBMError, ValueError):
    """An argument lies outside the domain of a function."""


class PhysicalityError(DomainError):
    """A covariance matrix violates the uncertainty principle."""


class QuadratureError(QBMError, ArithmeticError):
    """An integral did not reach its requested tolerance."""


class ConvergenceError(QBMError, ArithmeticError):
    """Time-dependent coefficients have not settled on the supplied grid."""


class InstabilityError(QBMError, ValueError):
    """Renormalised normal-mode frequencies are not positive."""


class IntegrationError(QBMError, ArithmeticError):
    """The ODE integrator failed (step size underflow or similar)."""


class ResourceError(QBMError, ValueError):
    """A requested problem size exceeds the configured cap."""


class RootNotBracketed(QBMError, ValueError):
    """A bracketing root finder was given an interval without a sign change."""


class ConfigError(QBMError, ValueError):
    """A run configuration is malformed or violates a parameter constraint."""
