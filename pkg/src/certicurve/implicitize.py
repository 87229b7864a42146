"""Implicit ideals of rational space cubics via moving planes.

A mu-basis of a proper non-planar cubic consists of three moving planes
whose coefficients are linear in the parameter.  Pairwise resultants in
the parameter give three quadrics cutting out the curve; the sampled
first-order distance against those quadrics is the error functional used
to score approximations.
"""

from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np
import sympy as sp

from .bezier import RationalCubicBezier
from .curves import RationalCurve
from .errors import CertiCurveError, DomainError, PlanarCurveError

_T = sp.Symbol("t")
_XYZW = sp.symbols("x y z w")


@dataclass(frozen=True)
class MovingPlane:
    """Plane with coefficients polynomial in t, acting on homogeneous
    points (x, y, z, w); dots to zero against the curve it came from."""

    coefficients: tuple[sp.Poly, sp.Poly, sp.Poly, sp.Poly]
    components: tuple[sp.Poly, sp.Poly, sp.Poly, sp.Poly]


@dataclass(frozen=True, eq=False)
class ImplicitIdeal:
    """Three exact quadrics vanishing on a cubic, with float mirrors
    normalized to unit largest coefficient for evaluation."""

    f: sp.Poly
    g: sp.Poly
    h: sp.Poly
    mirrors: tuple[np.ndarray, np.ndarray, np.ndarray]

    @classmethod
    def from_quadrics(cls, f, g, h) -> "ImplicitIdeal":
        polys = tuple(sp.Poly(q, *_XYZW[:3]) for q in (f, g, h))
        for q in polys:
            if q.total_degree() > 2:
                raise DomainError("ideal generators must be quadrics")
            if not q.coeffs():
                raise CertiCurveError("identically zero ideal generator")
        return cls(*polys, tuple(_quadric_matrix(q) for q in polys))

    @property
    def quadrics(self) -> tuple[sp.Poly, sp.Poly, sp.Poly]:
        return (self.f, self.g, self.h)


@dataclass(frozen=True)
class ErrorReport:
    """Sampled error functional e(t) over [t0, t1]."""

    samples: tuple[tuple[float, float], ...]
    max_error: float
    argmax_t: float
    m: int
    flagged: bool = False


def _quadric_matrix(q: sp.Poly) -> np.ndarray:
    # symmetric 4x4 acting on (x, y, z, 1); off-diagonals carry half of
    # each cross coefficient, and the whole matrix is scaled so the
    # largest polynomial coefficient has magnitude one
    scale = max(abs(c) for c in q.coeffs())
    Q = np.zeros((4, 4))
    x, y, z = _XYZW[:3]
    lookup = {
        (2, 0, 0): (0, 0), (0, 2, 0): (1, 1), (0, 0, 2): (2, 2),
        (0, 0, 0): (3, 3), (1, 1, 0): (0, 1), (1, 0, 1): (0, 2),
        (0, 1, 1): (1, 2), (1, 0, 0): (0, 3), (0, 1, 0): (1, 3),
        (0, 0, 1): (2, 3),
    }
    for mono, coeff in zip(q.monoms(), q.coeffs()):
        i, j = lookup[mono]
        val = float(sp.Rational(coeff) / sp.Rational(scale))
        if i == j:
            Q[i, i] = val
        else:
            Q[i, j] = Q[j, i] = val / 2
    return Q


def _homogeneous_components(b: RationalCubicBezier):
    t = _T
    bern = ((1 - t) ** 3, 3 * t * (1 - t) ** 2, 3 * t**2 * (1 - t), t**3)
    w = [sp.Rational(x) for x in b.weights]
    comps = []
    for axis in range(3):
        comps.append(sum(w[i] * sp.Rational(b.points[i][axis]) * bern[i]
                         for i in range(4)))
    comps.append(sum(w[i] * bern[i] for i in range(4)))
    return tuple(sp.Poly(sp.expand(c), t) for c in comps)


def mu_basis_cubic(b: RationalCubicBezier) -> tuple[MovingPlane, MovingPlane, MovingPlane]:
    """Three degree-1 moving planes spanning the syzygies of ``b``.

    The coefficient matrix of degree-1 syzygies is 5x8 (the product has
    degree four, each of the four plane coefficients is linear in t);
    for a non-planar cubic its nullspace is exactly three-dimensional
    and any basis of it is a mu-basis."""
    comps = _homogeneous_components(b)
    rows = [[comp.as_expr().coeff(_T, r) for comp in comps] for r in range(4)]
    if sp.Matrix(rows).nullspace():
        raise PlanarCurveError("a fixed plane contains the whole cubic")
    M = sp.zeros(5, 8)
    for ci, comp in enumerate(comps):
        for shift in (0, 1):
            for r in range(5):
                M[r, 2 * ci + shift] = comp.as_expr().coeff(_T, r - shift)
    null = M.nullspace()
    if len(null) != 3:
        raise CertiCurveError("moving-plane system rank-deficient for cubic")
    planes = []
    for vec in null:
        coeffs = tuple(sp.Poly(vec[2 * ci] + vec[2 * ci + 1] * _T, _T)
                       for ci in range(4))
        ident = sp.expand(sum(c.as_expr() * comp.as_expr()
                              for c, comp in zip(coeffs, comps)))
        if ident != 0:
            raise CertiCurveError("moving plane fails the vanishing identity")
        planes.append(MovingPlane(coeffs, comps))
    return tuple(planes)


def implicit_ideal(planes) -> ImplicitIdeal:
    """Pairwise resultants of three moving planes, dehomogenized at w=1.

    Each plane is linear in t, so each resultant is a 2x2 determinant of
    linear forms in (x, y, z, w): a quadric.  Vanishing on the source
    curve is re-checked symbolically before returning."""
    if len(planes) != 3:
        raise DomainError("need exactly three moving planes")
    x, y, z, w = _XYZW
    lin = []
    for pl in planes:
        u = sum(c.as_expr().coeff(_T, 0) * s for c, s in zip(pl.coefficients, _XYZW))
        v = sum(c.as_expr().coeff(_T, 1) * s for c, s in zip(pl.coefficients, _XYZW))
        lin.append((sp.expand(u), sp.expand(v)))
    comps = planes[0].components
    quadrics = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        q = sp.expand(lin[i][0] * lin[j][1] - lin[j][0] * lin[i][1])
        if q == 0:
            raise CertiCurveError("resultant of moving planes is identically zero")
        pulled = q.subs({x: comps[0].as_expr(), y: comps[1].as_expr(),
                         z: comps[2].as_expr(), w: comps[3].as_expr()})
        if sp.expand(pulled) != 0:
            raise CertiCurveError("resultant quadric does not vanish on the curve")
        quadrics.append(q.subs(w, 1))
    return ImplicitIdeal.from_quadrics(*quadrics)


def ideal_of(b: RationalCubicBezier) -> ImplicitIdeal:
    return implicit_ideal(mu_basis_cubic(b))


def point_errors(ideal: ImplicitIdeal, pts: np.ndarray) -> np.ndarray:
    """Summed first-order distances sum_q |q| / |grad q| at each point.

    Rows with a vanishing gradient for any quadric come back as nan."""
    pts = np.asarray(pts, dtype=float)
    h = np.hstack([pts, np.ones((pts.shape[0], 1))])
    total = np.zeros(pts.shape[0])
    for Q in ideal.mirrors:
        val = np.einsum("ni,ij,nj->n", h, Q, h)
        grad = 2.0 * (h @ Q)[:, :3]
        gn = np.linalg.norm(grad, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            total = total + np.abs(val) / gn
    return total


def error_functional(ideal: ImplicitIdeal, c: RationalCurve, t0, t1,
                     m: int = 300) -> ErrorReport:
    """Sample e(t) at t_i = t0 + (t1 - t0) i / m and report the maximum.

    Samples where some quadric has a vanishing gradient are dropped and
    the report flagged; an entirely invalid sweep raises."""
    if m < 2:
        raise DomainError("need at least two subdivisions")
    lo, hi = float(t0), float(t1)
    if not lo < hi:
        raise DomainError("empty sampling interval")
    ts = np.linspace(lo, hi, m + 1)
    errs = point_errors(ideal, c.evaluate_float(ts))
    valid = np.isfinite(errs)
    if not valid.any():
        raise CertiCurveError("gradient vanished at every sample")
    idx = int(np.argmax(np.where(valid, errs, -np.inf)))
    samples = tuple((float(t), float(e)) for t, e in zip(ts, errs))
    return ErrorReport(samples, float(errs[idx]), float(ts[idx]), m,
                       flagged=bool((~valid).any()))
