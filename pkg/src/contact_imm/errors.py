"""Exception types shared across the package."""


class ContactImmError(Exception):
    """Base class for all errors raised by this package."""


class SingularJacobian(ContactImmError):
    """Leg Jacobian is at or near a kinematic singularity."""


class NonFiniteState(ContactImmError):
    """A filter state or covariance contains NaN or infinity."""


class NonFiniteMeasurement(ContactImmError):
    """A raw sensor channel contains NaN or infinity."""


class SingularInnovation(ContactImmError):
    """Innovation covariance failed its Cholesky factorization."""


class DegenerateBank(ContactImmError):
    """All mode probabilities collapsed below the numerical floor."""


class InvalidProbability(ContactImmError):
    """A probability parameter is outside its valid range."""


class LengthMismatch(ContactImmError):
    """Time-indexed sequences passed to metrics have different lengths."""


class ConfigError(ContactImmError):
    """A scenario/run configuration failed validation."""


class UnreachableTarget(ContactImmError):
    """Inverse kinematics target is outside the leg workspace."""
