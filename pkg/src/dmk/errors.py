"""Exception hierarchy shared by the geometry, quadrature and solver layers."""

from __future__ import annotations


class DmkError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(DmkError):
    pass


class EmptyInterior(GeometryError):
    pass


class Unbounded(GeometryError):
    pass


class DegenerateGeometry(GeometryError):
    pass


class TightnessViolated(GeometryError):
    pass


class NonPositiveRadial(DmkError):
    pass


class NotUnimodular(DmkError):
    pass


class QuadratureNotConverged(DmkError):
    pass


class MeasureOnHemisphere(DmkError):
    """The measure is concentrated on a closed hemisphere; ``witness`` spans it."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateDensity(MeasureOnHemisphere):
    pass


class NotConverged(DmkError):
    """Raised with the best iterate attached so callers can still inspect it."""

    def __init__(self, message: str, polytope=None, report=None):
        super().__init__(message)
        self.polytope = polytope
        self.report = report


class FacetCollapse(NotConverged):
    pass


class PEqualsQ(DmkError):
    pass
