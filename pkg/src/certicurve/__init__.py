"""Certified cubic rational B-spline approximation of rational space curves."""

from .approximate import (
    Piece,
    SegmentApproximation,
    approximate_segment,
    fit_piece,
    solve_weights,
    subsegment,
)
from .assembly import (
    BSplineCurve,
    CertifiedResult,
    TopologyReport,
    certify,
    check_topology,
    interiors_disjoint,
    to_bspline,
)
from .bezier import RationalCubicBezier
from .characters import VertexKind, VertexList, build_vertex_list
from .curves import RationalCurve
from .errors import (
    CertiCurveError,
    DegenerateTetrahedronError,
    DomainError,
    ImproperCurveError,
    NoCertifiedBoundError,
    NonConvergentError,
    PlanarCurveError,
    TopologyUnresolvedError,
    ZeroPolynomialError,
)
from .implicitize import ErrorReport, ImplicitIdeal, error_functional, ideal_of
from .segmentation import QuasiCubicSegment, Tetrahedron, segment_curve
from .specio import load_bezier_spec, load_curve_spec

__version__ = "0.1.0"

__all__ = [
    "BSplineCurve",
    "CertiCurveError",
    "CertifiedResult",
    "DegenerateTetrahedronError",
    "DomainError",
    "ErrorReport",
    "ImplicitIdeal",
    "ImproperCurveError",
    "NoCertifiedBoundError",
    "NonConvergentError",
    "Piece",
    "PlanarCurveError",
    "QuasiCubicSegment",
    "RationalCubicBezier",
    "RationalCurve",
    "SegmentApproximation",
    "Tetrahedron",
    "TopologyReport",
    "TopologyUnresolvedError",
    "VertexKind",
    "VertexList",
    "ZeroPolynomialError",
    "approximate_segment",
    "build_vertex_list",
    "certify",
    "check_topology",
    "error_functional",
    "fit_piece",
    "ideal_of",
    "interiors_disjoint",
    "load_bezier_spec",
    "load_curve_spec",
    "segment_curve",
    "solve_weights",
    "subsegment",
    "to_bspline",
    "__version__",
]
