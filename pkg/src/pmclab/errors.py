"""Exception types raised across the package."""


class PMCError(Exception):
    """Base class for all package errors."""


class OrderingViolation(PMCError):
    """Lower sheet lies above the upper sheet at some node."""


class RadiusTooSmall(PMCError):
    """The cap radius 2/c is below the cylinder radius (c > 2)."""


class NonCoercive(PMCError):
    """The single-sheet energy has no bounded minimizer for this c."""


class MaxItersExceeded(PMCError):
    """Solver ran out of iterations; ``report`` holds the best iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoContact(PMCError):
    """Sheets stay disjoint, so there is no free boundary to shoot for."""


class NoFreeBoundary(PMCError):
    """Contact set is empty or covers the whole grid."""


class DisconnectedContact(PMCError):
    """Contact set does not contain the center node."""


class NoThreshold(PMCError):
    """Mass bounds do not cross inside the bracketing interval."""


class Inapplicable(PMCError):
    """Precondition of an inequality check is not met."""
