"""Exception types shared across the package."""


class CertiCurveError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CertiCurveError):
    """Invalid curve data: denominator roots inside the domain, empty domain, bad input."""


class ZeroPolynomialError(CertiCurveError):
    """An operation that needs a nonzero polynomial received the zero polynomial."""


class PlanarCurveError(CertiCurveError):
    """The curve is planar (or straight); the spatial pipeline does not apply."""


class ImproperCurveError(CertiCurveError):
    """The parametrization traces its image more than once (curve not proper)."""


class DegenerateTetrahedronError(CertiCurveError):
    """Tangent/osculating-plane intersections failed to produce a proper tetrahedron."""


class NoCertifiedBoundError(CertiCurveError):
    """The boundary search exhausted its halving budget without a certified interval."""


class NonConvergentError(CertiCurveError):
    """Subdivision hit the depth limit before reaching the error tolerance."""


class TopologyUnresolvedError(CertiCurveError):
    """Refinement rounds were exhausted with tetrahedra still overlapping."""
