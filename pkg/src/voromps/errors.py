"""Exception types shared across the package."""

from __future__ import annotations


class VoroMpsError(Exception):
    """Base class so callers can catch everything from this package at once."""


class GeometryError(VoroMpsError):
    """Invalid geometric input: bad polygon, bad domain, bad annulus."""


class DuplicateSiteError(GeometryError):
    def __init__(self, i: int, j: int, dist: float):
        self.indices = (i, j)
        super().__init__(
            f"sites {i} and {j} are {dist:.3e} apart, below the duplicate "
            "threshold; Voronoi cells would be degenerate"
        )


class SiteOutsideDomainError(GeometryError):
    def __init__(self, index: int, site):
        self.index = index
        super().__init__(f"site {index} at {tuple(site)} lies outside the padded domain")


class WeightError(VoroMpsError):
    """Weight profile violates a requirement (negativity, bad support, ...)."""


class DegenerateConfigurationError(VoroMpsError):
    """An operator denominator fell below its positivity floor."""


class AssumptionViolationError(VoroMpsError):
    """A standing-assumption clause a caller insisted on does not hold."""


class QuadratureError(VoroMpsError):
    """A quadrature refinement check failed to converge."""
