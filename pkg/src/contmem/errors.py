"""Exception types raised across the package."""

import numpy as np


class InvalidArgumentError(ValueError):
    """Malformed input: wrong shape, non-finite entries, bad parameter."""


class OutOfDomainError(InvalidArgumentError):
    """A time coordinate outside the unit interval."""


class DegenerateDensityError(InvalidArgumentError):
    """A density whose total mass is zero (or not finite)."""


class SingularMatrixError(np.linalg.LinAlgError):
    """The regression system could not be solved."""


class EmptyMemoryError(RuntimeError):
    """An operation needed stored content but none exists."""


class ConfigError(InvalidArgumentError):
    """Invalid or unknown configuration values."""
