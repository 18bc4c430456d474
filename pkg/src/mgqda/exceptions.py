"""Exception and warning types shared across the package."""


class MgqdaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(MgqdaError, ValueError):
    """An argument violates a documented precondition."""


class NotPSD(MgqdaError):
    """A matrix required to be positive semidefinite is not."""


class InsufficientGroupSize(MgqdaError):
    """A group has fewer than two observations."""


class ConstructionError(MgqdaError):
    """A generated covariance matrix failed its validity check."""


class DegenerateDiagonalWarning(UserWarning):
    """A coordinate block with a nonpositive quadratic coefficient was forced to zero."""
