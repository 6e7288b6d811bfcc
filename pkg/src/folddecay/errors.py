"""Exception types shared across the package."""


class FoldDecayError(Exception):
    """Base class for all package errors."""


class DomainError(FoldDecayError, ValueError):
    """Input outside the domain where an operation is defined."""


class RegularPointError(FoldDecayError):
    """Normalization requested at a point of nonzero curvature."""


class DegenerateError(FoldDecayError):
    """Rank condition fails (rank of dN is 0, or grad J vanishes)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NonConvergenceError(FoldDecayError):
    """An iterative solver failed to converge."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class QuadratureBudgetError(FoldDecayError):
    """Adaptive quadrature exceeded its node budget.

    ``achieved`` holds the relative difference between the last two
    refinement levels, ``value`` the finest estimate available.
    """

    def __init__(self, message, achieved=float("nan"), value=None):
        super().__init__(message)
        self.achieved = achieved
        self.value = value


class FitError(FoldDecayError):
    """Too few usable samples for a power-law fit."""


class ExceptionalLevelError(DomainError):
    """Lattice energy too close to a critical value or the flat umbilic level."""


class ResolutionError(FoldDecayError):
    """Result did not converge between two resolutions."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class UnknownSurfaceError(FoldDecayError, KeyError):
    """Surface name not found in the catalog."""
