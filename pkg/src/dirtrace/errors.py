"""Exception types shared across the package."""


class DirtraceError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(DirtraceError):
    """Malformed construction parameters or inconsistent inputs."""


class PointOutsideDomain(DirtraceError):
    """An operation requiring an interior point was given an outside one."""


class NotDirectionalBoundary(DirtraceError):
    """The point is not an exit point of any chord for the direction."""


class InvalidRatio(DirtraceError):
    """Cantor ratio outside the admissible range ]0, 1/3]."""


class OverlappingGaps(DirtraceError):
    """Gap intervals handed to the staircase construction intersect."""


class UnknownName(DirtraceError):
    """Lookup of a named domain or field failed."""


class UnresolvedSingularity(DirtraceError):
    """An integrand is singular on too many chords to integrate reliably."""


class DivergentChordIntegral(DirtraceError):
    """A per-chord trace integral failed to produce a finite value."""


class NonIntegrablePairing(DirtraceError):
    """The paired boundary integrand diverges under refinement."""


class InsufficientOverlap(DirtraceError):
    """No boundary point was reachable from two or more directions."""


class NotInH1tr(DirtraceError):
    """Left and right traces disagree at an isolated boundary point."""
