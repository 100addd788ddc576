"""Exception hierarchy.

CLI exit codes map onto these: usage/parameter problems exit 1, data and
domain problems exit 2, estimation failures exit 3.
"""


class CatSdrError(Exception):
    """Base class for all catsdr errors."""


class DomainError(CatSdrError, ValueError):
    """A numeric input is outside the mathematical domain of an operation."""


class DegenerateLinkError(DomainError):
    """An alternative link is evaluated at a boundary survivor probability."""


class ParameterError(CatSdrError, ValueError):
    """An invalid parameter combination (d >= p, k > n, folds too large, ...)."""


class DataError(CatSdrError, ValueError):
    """A dataset cannot be parsed or fails its structural invariants."""


class EstimationError(CatSdrError, RuntimeError):
    """An estimator could not produce a result (all local fits flagged, ...)."""
