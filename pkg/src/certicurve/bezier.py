"""Rational cubic Bezier curves in standard form.

Standard form fixes the end weights to 1, leaving two free weights w1, w2.
Shoulder points, parallel points, and osculating-plane ratios all assume
that form.  De Casteljau subdivision is exact in homogeneous coordinates
but renormalizing a piece back to unit end weights needs a cube root, so
split pieces carry general positive end weights (w0, w3) and only the
operations that genuinely need standard form insist on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import polyops
from .curves import RationalCurve, RationalFn, T, Vec3, _fvec
from .errors import CertiCurveError, DegenerateTetrahedronError, DomainError
from .polyops import RootInterval

F = Fraction


def _vec(p) -> Vec3:
    x, y, z = p
    return (F(x), F(y), F(z))


def _det3(a: Vec3, b: Vec3, c: Vec3) -> Fraction:
    return (a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))


def _axpy(*terms) -> Vec3:
    """Sum of (scalar, vec) terms."""
    out = [F(0), F(0), F(0)]
    for c, v in terms:
        for i in range(3):
            out[i] += c * v[i]
    return tuple(out)


class RationalCubicBezier:
    """Cubic rational Bezier curve with positive weights.

    Standard form has w0 = w3 = 1; subdivision can produce general
    positive end weights.  Control points and weights are exact.
    """

    __slots__ = ("points", "weights", "_curve")

    def __init__(self, p0, p1, p2, p3, w1, w2, *, w0=1, w3=1):
        self.points: tuple[Vec3, Vec3, Vec3, Vec3] = tuple(_vec(p) for p in (p0, p1, p2, p3))
        self.weights: tuple[Fraction, ...] = (F(w0), F(w1), F(w2), F(w3))
        if any(w <= 0 for w in self.weights):
            raise DomainError("Bezier weights must be positive")
        a, b, c, d = self.points
        vol = _det3(tuple(b[i] - a[i] for i in range(3)),
                    tuple(c[i] - a[i] for i in range(3)),
                    tuple(d[i] - a[i] for i in range(3)))
        if vol == 0:
            raise DegenerateTetrahedronError("planar control tetrahedron")
        self._curve = None

    @property
    def is_standard(self) -> bool:
        return self.weights[0] == 1 and self.weights[3] == 1

    def _require_standard(self, what: str):
        if not self.is_standard:
            raise CertiCurveError(f"{what} requires unit end weights")

    @property
    def w1(self) -> Fraction:
        return self.weights[1]

    @property
    def w2(self) -> Fraction:
        return self.weights[2]

    def __repr__(self):
        return f"RationalCubicBezier(weights={tuple(map(str, self.weights))})"

    # -- evaluation ----------------------------------------------------------

    def _bernstein(self, s: Fraction) -> tuple[Fraction, ...]:
        u = 1 - s
        return (u**3, 3 * s * u**2, 3 * s**2 * u, s**3)

    def eval(self, s) -> Vec3:
        """Exact point at s in [0,1]."""
        s = F(s)
        basis = self._bernstein(s)
        den = sum(b * w for b, w in zip(basis, self.weights))
        num = _axpy(*((b * w, p) for b, w, p in zip(basis, self.weights, self.points)))
        return tuple(c / den for c in num)

    def eval_float(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        u = 1.0 - ts
        basis = np.stack([u**3, 3 * ts * u**2, 3 * ts**2 * u, ts**3])
        w = np.array([float(v) for v in self.weights])
        pts = np.array([[float(c) for c in p] for p in self.points])
        den = np.tensordot(w, basis, axes=(0, 0))
        num = np.tensordot((w[:, None] * pts).T, basis, axes=(1, 0))
        return (num / den).T

    def as_curve(self) -> RationalCurve:
        """The same curve as a RationalCurve on [0, 1]."""
        if self._curve is None:
            # Bernstein to power basis, degree 3
            rows = ((1, -3, 3, -1), (0, 3, -6, 3), (0, 0, 3, -3), (0, 0, 0, 1))
            den = [sum(self.weights[i] * rows[i][j] for i in range(4)) for j in range(4)]
            comps = []
            for axis in range(3):
                num = [sum(self.weights[i] * self.points[i][axis] * rows[i][j]
                           for i in range(4)) for j in range(4)]
                comps.append(RationalFn.from_coeffs(num, den))
            self._curve = RationalCurve(*comps, (F(0), F(1)), _validated=True)
        return self._curve

    # -- subdivision ---------------------------------------------------------

    def split(self, s) -> tuple["RationalCubicBezier", "RationalCubicBezier"]:
        """Exact de Casteljau subdivision at s in (0,1).

        The left piece traces self on [0,s] and the right on [s,1], both
        under affine parameter maps.  Sub control tetrahedra are contained
        in this curve's control tetrahedron.
        """
        s = F(s)
        if not 0 < s < 1:
            raise DomainError("split parameter must lie strictly inside (0,1)")
        # homogeneous points (w*p, w)
        hp = [(tuple(w * c for c in p), w) for p, w in zip(self.points, self.weights)]

        def lerp(a, b):
            pa, wa = a
            pb, wb = b
            return (tuple((1 - s) * x + s * y for x, y in zip(pa, pb)),
                    (1 - s) * wa + s * wb)

        q = [lerp(hp[i], hp[i + 1]) for i in range(3)]
        r = [lerp(q[i], q[i + 1]) for i in range(2)]
        m = lerp(r[0], r[1])
        left_h = [hp[0], q[0], r[0], m]
        right_h = [m, r[1], q[2], hp[3]]

        def dehom(hs):
            pts = [tuple(c / w for c in p) for p, w in hs]
            ws = [w for _, w in hs]
            return RationalCubicBezier(*pts, ws[1], ws[2], w0=ws[0], w3=ws[3])

        return dehom(left_h), dehom(right_h)

    # -- shoulder point ------------------------------------------------------

    def shoulder(self) -> "ShoulderPoint":
        """Midparameter shoulder point with its barycentric coefficients."""
        self._require_standard("shoulder point")
        w1, w2 = self.w1, self.w2
        denom = 2 + 3 * w1 + 3 * w2
        lam1 = 3 * w1 / denom
        lam2 = 3 * w2 / denom
        s = self.eval(F(1, 2))
        return ShoulderPoint(s=s, lambda1=lam1, lambda2=lam2, param=F(1, 2))

    # -- parallel points -----------------------------------------------------

    def parallel_point(self, face: str) -> RootInterval:
        """Parameter of the point farthest from a control-tetrahedron face.

        "P1" solves the w1 constraint and belongs to the face p0 p1 p3;
        "P2" solves the w2 constraint and belongs to p0 p2 p3.  At the
        returned parameter the tangent is parallel to that face.  Exact
        rational roots come back as exact intervals.
        """
        self._require_standard("parallel point")
        if face == "P1":
            # 3 w1 t (t-1)^2 = 3t^3 - 6t^2 + 6t - 2
            w = self.w1
            coeffs = [F(-2), 6 - 3 * w, 6 * w - 6, 3 - 3 * w]
        elif face == "P2":
            # 3 w2 t^2 (t-1) = 3t^3 - 3t^2 + 3t - 1
            w = self.w2
            coeffs = [F(-1), F(3), 3 * w - 3, 3 - 3 * w]
        else:
            raise ValueError("face must be 'P1' or 'P2'")
        p = polyops.poly_from_coeffs(coeffs, T)
        roots = [ri for ri in polyops.isolate_real_roots(p, F(0), F(1))
                 if not (ri.is_exact and ri.lo in (0, 1))]
        if len(roots) != 1:
            raise CertiCurveError("parallel-point equation lost uniqueness on (0,1)")
        return polyops.refine_root(p, roots[0], F(1, 10**24))

    # -- osculating plane ratios ---------------------------------------------

    def osculating_ratios(self, tstar) -> tuple[Fraction, Fraction, Fraction]:
        """Ratios along edges p0p1, p1p2, p2p3 cut by the osculating plane
        at tstar.  Exact for rational tstar."""
        tstar = F(tstar)
        if not 0 < tstar < 1:
            raise DomainError("tstar must lie in (0,1)")
        fd = self.as_curve().frenet(tstar)
        n = fd.binormal_exact_plus
        d = sum(a * b for a, b in zip(n, fd.point))
        out = []
        for a, b in ((self.points[0], self.points[1]),
                     (self.points[1], self.points[2]),
                     (self.points[2], self.points[3])):
            na = sum(x * y for x, y in zip(n, a))
            nb = sum(x * y for x, y in zip(n, b))
            if nb == na:
                raise CertiCurveError("osculating plane parallel to a control edge")
            out.append((d - na) / (nb - na))
        return tuple(out)


@dataclass(frozen=True)
class ShoulderPoint:
    """Shoulder point s with s = l1*p1 + l2*p2 + (1-l1-l2)*(p0+p3)/2."""

    s: Vec3
    lambda1: Fraction
    lambda2: Fraction
    param: Fraction

    @property
    def s_f(self) -> np.ndarray:
        return _fvec(self.s)


def weights_from_shoulder(p0, p1, p2, p3, s) -> tuple[Fraction, Fraction]:
    """Recover (w1, w2) of the standard-form curve on this control polygon
    whose shoulder point is s.

    Solves the barycentric system for (l1, l2) over the triangle
    (p1, p2, midpoint of p0 p3) and inverts the shoulder formulas.
    """
    p0, p1, p2, p3, s = (_vec(v) for v in (p0, p1, p2, p3, s))
    pm = tuple((a + b) / 2 for a, b in zip(p0, p3))
    u = tuple(a - b for a, b in zip(p1, pm))
    v = tuple(a - b for a, b in zip(p2, pm))
    rhs = tuple(a - b for a, b in zip(s, pm))
    sol = None
    for i in range(3):
        for j in range(i + 1, 3):
            det = u[i] * v[j] - u[j] * v[i]
            if det != 0:
                sol = ((rhs[i] * v[j] - rhs[j] * v[i]) / det,
                       (u[i] * rhs[j] - u[j] * rhs[i]) / det)
                break
        if sol is not None:
            break
    if sol is None:
        raise DegenerateTetrahedronError("shoulder triangle is degenerate")
    lam1, lam2 = sol
    for i in range(3):  # the point must sit exactly in the triangle's plane
        if rhs[i] != lam1 * u[i] + lam2 * v[i]:
            raise CertiCurveError("point does not lie in the shoulder plane")
    rem = 1 - lam1 - lam2
    if rem <= 0 or lam1 <= 0 or lam2 <= 0:
        raise CertiCurveError("point is not a shoulder point of this tetrahedron")
    w1 = 2 * lam1 / (3 * rem)
    w2 = 2 * lam2 / (3 * rem)
    return w1, w2
