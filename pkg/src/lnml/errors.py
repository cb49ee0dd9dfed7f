"""Exception types raised by the library."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of a function or parameter set."""


class DimensionError(ValueError):
    """Array shapes disagree with each other or with the model dimension."""


class NotPositiveDefiniteError(np.linalg.LinAlgError, ValueError):
    """A matrix that must be symmetric positive definite is not."""
