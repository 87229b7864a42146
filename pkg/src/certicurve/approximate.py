"""Shoulder point approximation of quasi-cubic segments.

Each segment gets an associated cubic Bezier on its own tetrahedron;
weights are chosen so the Bezier's shoulder point lands on the curve's
shoulder point, the implicit-ideal error functional scores the result,
and segments over budget are split and retried.  Splitting at the
shoulder parameter is the default; arc-length bisection is the
provably convergent fallback.
"""

from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np
import sympy as sp
from scipy.integrate import quad
from scipy.optimize import brentq

from . import polyops
from .bezier import RationalCubicBezier, ShoulderPoint
from .curves import RationalCurve, T
from .errors import CertiCurveError, DomainError, NonConvergentError
from .implicitize import ErrorReport, ImplicitIdeal, error_functional, ideal_of
from .segmentation import QuasiCubicSegment, associated_tetrahedron

STRATEGIES = ("shoulder", "arclength")
STALE_SPLIT_LIMIT = 8
SNAP_SHIFT = 48

_W1, _W2 = sp.symbols("omega1 omega2", positive=True)


@dataclass(frozen=True)
class AssociatedCubicFamily:
    """Cubic Bezier family on a fixed control tetrahedron, weights free."""

    p0: tuple
    p1: tuple
    p2: tuple
    p3: tuple

    def with_weights(self, w1, w2) -> RationalCubicBezier:
        return RationalCubicBezier(self.p0, self.p1, self.p2, self.p3, w1, w2)


@dataclass(frozen=True)
class WeightSolution:
    """Optimized weights with the squared shoulder gap they achieve."""

    w1: F
    w2: F
    D: F
    method: str  # "ClosedForm" or "Fallback"


@dataclass(frozen=True)
class Piece:
    """One fitted cubic with its implicit ideal and error report."""

    bezier: RationalCubicBezier
    ideal: object
    report: object
    t0: F
    t1: F


@dataclass(frozen=True)
class SegmentApproximation:
    segment: QuasiCubicSegment
    pieces: tuple  # of Piece, left to right
    depth: int
    strategy: str


def associated_cubic(seg: QuasiCubicSegment) -> AssociatedCubicFamily:
    r0, r1, r2, r3 = seg.tet.vertices
    return AssociatedCubicFamily(r0, r1, r2, r3)


def _sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def _cross(p, q):
    return (p[1] * q[2] - p[2] * q[1],
            p[2] * q[0] - p[0] * q[2],
            p[0] * q[1] - p[1] * q[0])


def _dot(p, q):
    return sum(a * b for a, b in zip(p, q))


def _triangle_coords(r1, r2, rm, s):
    # barycentric-style (l1, l2) with s = l1 r1 + l2 r2 + (1-l1-l2) rm,
    # solved from the best-conditioned coordinate pair
    u, v, rhs = _sub(r1, rm), _sub(r2, rm), _sub(s, rm)
    best = None
    for i in range(3):
        for j in range(i + 1, 3):
            det = u[i] * v[j] - u[j] * v[i]
            if det != 0 and (best is None or abs(det) > abs(best[0])):
                best = (det, i, j)
    if best is None:
        raise CertiCurveError("shoulder triangle is degenerate")
    det, i, j = best
    l1 = (rhs[i] * v[j] - rhs[j] * v[i]) / det
    l2 = (u[i] * rhs[j] - u[j] * rhs[i]) / det
    return l1, l2


def shoulder_point_segment(seg: QuasiCubicSegment) -> ShoulderPoint:
    """Intersection of the segment with the triangle r1 r2 rM.

    The parameter is the root of the triangle plane composed with the
    curve; exactly one root in (t0, t1) may land inside the triangle,
    anything else means the segmentation invariants are broken."""
    r0, r1, r2, r3 = seg.tet.vertices
    rm = tuple((a + b) / 2 for a, b in zip(r0, r3))
    n = _cross(_sub(r2, r1), _sub(rm, r1))
    d = _dot(n, r1)
    comps = seg.curve.components
    dens = [f.den.as_expr() for f in comps]
    expr = sum(sp.Rational(ni) * f.num.as_expr() * dens[(i + 1) % 3] * dens[(i + 2) % 3]
               for i, (ni, f) in enumerate(zip(n, comps)))
    expr -= sp.Rational(d) * dens[0] * dens[1] * dens[2]
    p = sp.Poly(sp.expand(expr), T)
    if p.is_zero:
        raise CertiCurveError("segment lies in its shoulder plane")
    width = (seg.t1 - seg.t0) / 2**SNAP_SHIFT
    hits = []
    for ri in polyops.isolate_real_roots(p, seg.t0, seg.t1):
        if ri.is_exact and ri.lo in (seg.t0, seg.t1):
            continue
        ri = polyops.refine_root(p, ri, width)
        tval = ri.lo if ri.is_exact else ri.mid
        if not seg.t0 < tval < seg.t1:
            continue
        point = seg.curve.evaluate(tval)
        l1, l2 = _triangle_coords(r1, r2, rm, point)
        if l1 > 0 and l2 > 0 and l1 + l2 < 1:
            hits.append(ShoulderPoint(s=point, lambda1=l1, lambda2=l2, param=tval))
    if len(hits) != 1:
        raise CertiCurveError(
            f"expected one shoulder point in ({seg.t0}, {seg.t1}), found {len(hits)}"
        )
    return hits[0]


def _positive_roots(p: sp.Poly):
    """Positive real roots, exact where possible, else snapped rationals."""
    if p.degree() <= 0:
        return []
    bound = 1 + max(abs(c) for c in p.all_coeffs()) / abs(p.LC())
    out = []
    for ri in polyops.isolate_real_roots(p, F(0), polyops.as_fraction(bound)):
        if ri.is_exact:
            if ri.lo > 0:
                out.append(ri.lo)
            continue
        ri = polyops.refine_root(p, ri, F(1, 2**SNAP_SHIFT))
        if ri.mid > 0:
            out.append(ri.mid)
    return out


def solve_weights(seg: QuasiCubicSegment,
                  family: AssociatedCubicFamily | None = None) -> WeightSolution:
    """Weights minimizing the squared shoulder gap D(w1, w2).

    Clears the derivative of D into two polynomial equations, eliminates
    w2 by resultant, and isolates positive roots; the least-D positive
    pair wins.  Without one, weights are recovered from the shoulder
    point's triangle coordinates, or default to unit."""
    if family is None:
        family = associated_cubic(seg)
    sr = shoulder_point_segment(seg)
    a = [x0 + x3 - 2 * s for x0, x3, s in zip(family.p0, family.p3, sr.s)]
    b = [3 * (x1 - s) for x1, s in zip(family.p1, sr.s)]
    c = [3 * (x2 - s) for x2, s in zip(family.p2, sr.s)]
    N = sum((sp.Rational(ai) + sp.Rational(bi) * _W1 + sp.Rational(ci) * _W2) ** 2
            for ai, bi, ci in zip(a, b, c))
    M = 2 + 3 * _W1 + 3 * _W2
    # stationarity of N / M^2, denominators cleared
    e1 = sp.Poly(sp.expand(sp.diff(N, _W1) * M - 6 * N), _W1, _W2)
    e2 = sp.Poly(sp.expand(sp.diff(N, _W2) * M - 6 * N), _W1, _W2)

    def gap(w1, w2):
        num = sum((ai + bi * w1 + ci * w2) ** 2 for ai, bi, ci in zip(a, b, c))
        return num / (2 + 3 * w1 + 3 * w2) ** 2

    best = None
    if not e1.is_zero and not e2.is_zero:
        res = sp.Poly(sp.resultant(e1.as_expr(), e2.as_expr(), _W2), _W1)
        if not res.is_zero:
            for w1 in _positive_roots(res):
                restricted = sp.Poly(e1.as_expr().subs(_W1, sp.Rational(w1)), _W2)
                for w2 in _positive_roots(restricted):
                    d = gap(w1, w2)
                    if best is None or d < best.D:
                        best = WeightSolution(w1, w2, d, "ClosedForm")
    if best is not None:
        return best
    l1, l2, rest = sr.lambda1, sr.lambda2, 1 - sr.lambda1 - sr.lambda2
    if l1 > 0 and l2 > 0 and rest > 0:
        w1, w2 = 2 * l1 / (3 * rest), 2 * l2 / (3 * rest)
    else:
        w1 = w2 = F(1)
    return WeightSolution(w1, w2, gap(w1, w2), "Fallback")


def arc_length_midpoint(seg: QuasiCubicSegment) -> F:
    """Parameter splitting the segment's arc length in half.

    Adaptive quadrature of the speed plus bisection on the cumulative
    length, then a rational snap well inside the target tolerance."""
    c = seg.curve
    lo, hi = float(seg.t0), float(seg.t1)

    def speed(t):
        v = c.evaluate_float(np.array([t]), order=1)[0]
        return float(np.sqrt(np.dot(v, v)))

    total = quad(speed, lo, hi, epsrel=1e-12, limit=200)[0]

    def g(t):
        return quad(speed, lo, t, epsrel=1e-12, limit=200)[0] - total / 2

    tm = brentq(g, lo, hi, xtol=(hi - lo) * 1e-12, rtol=8.9e-16)
    snapped = F(tm).limit_denominator(10**15)
    if not seg.t0 < snapped < seg.t1:
        snapped = (seg.t0 + seg.t1) / 2
    return snapped


def subsegment(seg: QuasiCubicSegment, a, b) -> QuasiCubicSegment:
    # sub-segments inherit the quasi-cubic conditions, so the parent's
    # certificate records stay attached
    return QuasiCubicSegment(
        curve=seg.curve, t0=a, t1=b,
        tet=associated_tetrahedron(seg.curve, a, b),
        frames=(seg.curve.frenet(a), seg.curve.frenet(b)),
        cert=seg.cert,
    )


def fit_piece(seg: QuasiCubicSegment, m: int = 300) -> Piece:
    """Optimal-weight cubic for one segment, with ideal and error report."""
    family = associated_cubic(seg)
    ws = solve_weights(seg, family)
    bez = family.with_weights(ws.w1, ws.w2)
    ideal = ideal_of(bez)
    rep = error_functional(ideal, seg.curve, seg.t0, seg.t1, m)
    return Piece(bez, ideal, rep, seg.t0, seg.t1)


def split_piece(seg: QuasiCubicSegment, a, b, tsplit, m: int = 300):
    """Refit [a, tsplit] and [tsplit, b] of a segment as two pieces."""
    left = fit_piece(subsegment(seg, a, tsplit), m)
    right = fit_piece(subsegment(seg, tsplit, b), m)
    return left, right


def approximate_segment(seg: QuasiCubicSegment, delta, strategy: str = "shoulder",
                        *, m: int = 300, max_depth: int = 32) -> SegmentApproximation:
    """Recursive shoulder point approximation to error bound delta."""
    delta = float(delta)
    if delta <= 0:
        raise DomainError("error bound must be positive")
    if strategy not in STRATEGIES:
        raise DomainError(f"strategy must be one of {STRATEGIES}")
    pieces = []
    deepest = 0

    def recurse(s, depth, mode, stale, prev_err):
        nonlocal deepest
        deepest = max(deepest, depth)
        if depth > max_depth:
            raise NonConvergentError(
                f"subdivision depth {max_depth} exceeded on [{s.t0}, {s.t1}], "
                f"last error {prev_err}"
            )
        piece = fit_piece(s, m)
        rep = piece.report
        if rep.max_error < delta:
            pieces.append(piece)
            return
        if mode == "shoulder":
            stale = stale + 1 if prev_err is not None and rep.max_error >= prev_err else 0
            if stale >= STALE_SPLIT_LIMIT:
                mode = "arclength"
        if mode == "shoulder":
            tsplit = shoulder_point_segment(s).param
        else:
            tsplit = arc_length_midpoint(s)
        recurse(subsegment(s, s.t0, tsplit), depth + 1, mode, stale, rep.max_error)
        recurse(subsegment(s, tsplit, s.t1), depth + 1, mode, stale, rep.max_error)

    recurse(seg, 0, strategy, 0, None)
    return SegmentApproximation(seg, tuple(pieces), deepest, strategy)
