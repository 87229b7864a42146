"""Rational space curves with exact arithmetic.

A curve is three rational functions of one parameter over an interval whose
denominators never vanish there.  Everything downstream needs derivatives,
curvature/torsion numerators, and one-sided Frenet frames that stay defined
at cusps and inflections, so those live here.  Exact values are Fractions;
float mirrors are produced on demand for sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp
from sympy import Poly, Rational, symbols

from . import polyops
from .errors import DomainError, PlanarCurveError
from .polyops import as_fraction, as_rational

T = symbols("t")

Vec3 = tuple[Fraction, Fraction, Fraction]


def _fvec(v) -> np.ndarray:
    return np.array([float(c) for c in v], dtype=float)


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ZeroDivisionError("cannot normalize the zero vector")
    return v / n


class RationalFn:
    """Reduced quotient of two polynomials in one variable over QQ."""

    __slots__ = ("num", "den", "_float_cache")

    def __init__(self, num: Poly, den: Poly, *, reduce: bool = True):
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        if reduce:
            g = num.gcd(den)
            if g.degree() > 0:
                num = num.quo(g)
                den = den.quo(g)
            lc = den.LC()
            if lc != 1:
                num = Poly(num.as_expr() / lc, T, domain="QQ")
                den = den.monic()
        self.num = num
        self.den = den
        self._float_cache = None

    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence = (1,)) -> "RationalFn":
        return cls(polyops.poly_from_coeffs(num, T), polyops.poly_from_coeffs(den, T))

    @classmethod
    def const(cls, c) -> "RationalFn":
        return cls.from_coeffs([c])

    def __repr__(self):
        return f"RationalFn({self.num.as_expr()})/({self.den.as_expr()})"

    def __call__(self, x: Fraction) -> Fraction:
        n = self.num.eval(as_rational(x))
        d = self.den.eval(as_rational(x))
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at {x}")
        return as_fraction(n) / as_fraction(d)

    def _floats(self):
        if self._float_cache is None:
            nc = np.array([float(c) for c in polyops.coeffs_of(self.num)] or [0.0])
            dc = np.array([float(c) for c in polyops.coeffs_of(self.den)] or [1.0])
            self._float_cache = (nc, dc)
        return self._float_cache

    def eval_float(self, ts: np.ndarray) -> np.ndarray:
        nc, dc = self._floats()
        pv = np.polynomial.polynomial.polyval
        return pv(ts, nc) / pv(ts, dc)

    def deriv(self) -> "RationalFn":
        n, d = self.num, self.den
        num = n.diff(T) * d - n * d.diff(T)
        return RationalFn(Poly(num, T, domain="QQ"), Poly(d.as_expr() ** 2, T, domain="QQ"))

    def __add__(self, other: "RationalFn") -> "RationalFn":
        num = self.num * other.den + other.num * self.den
        return RationalFn(Poly(num, T, domain="QQ"), Poly(self.den * other.den, T, domain="QQ"))

    def __sub__(self, other: "RationalFn") -> "RationalFn":
        num = self.num * other.den - other.num * self.den
        return RationalFn(Poly(num, T, domain="QQ"), Poly(self.den * other.den, T, domain="QQ"))

    def __mul__(self, other: "RationalFn") -> "RationalFn":
        return RationalFn(
            Poly(self.num * other.num, T, domain="QQ"),
            Poly(self.den * other.den, T, domain="QQ"),
        )

    def __neg__(self) -> "RationalFn":
        return RationalFn(Poly(-self.num.as_expr(), T, domain="QQ"), self.den, reduce=False)

    def is_zero(self) -> bool:
        return self.num.is_zero

    def compose_poly(self, phi: Poly) -> "RationalFn":
        """Substitute a polynomial for the variable."""
        return RationalFn(
            Poly(self.num.as_expr().subs(T, phi.as_expr()), T, domain="QQ"),
            Poly(self.den.as_expr().subs(T, phi.as_expr()), T, domain="QQ"),
        )

    def compose_mobius(self, a, b, c, d) -> "RationalFn":
        """Substitute t <- (a u + b) / (c u + d), cleared to a rational function."""
        a, b, c, d = (as_rational(v) for v in (a, b, c, d))
        top = Poly(a * T + b, T, domain="QQ")
        bot = Poly(c * T + d, T, domain="QQ")
        deg = max(self.num.degree(), self.den.degree(), 0)

        def lift(p: Poly) -> Poly:
            acc = Poly(0, T, domain="QQ")
            for i, coef in enumerate(polyops.coeffs_of(p)):
                if coef:
                    term = top**i * bot ** (deg - i)
                    acc = acc + Poly(as_rational(coef) * term.as_expr(), T, domain="QQ")
            return acc

        return RationalFn(lift(self.num), lift(self.den))


def _clear_rows(fns: Sequence[RationalFn], sign_point: Fraction) -> tuple[tuple[Poly, Poly, Poly], Poly]:
    """Common-denominator numerator row for a vector of rational functions.

    The returned denominator is positive at ``sign_point`` (hence on any
    interval where it has no roots), so the row is a positive multiple of
    the vector there.
    """
    den = fns[0].den
    for f in fns[1:]:
        den = den.lcm(f.den)
    nums = []
    for f in fns:
        mult = den.quo(f.den)
        nums.append(Poly(f.num * mult, T, domain="QQ"))
    if den.eval(as_rational(sign_point)) < 0:
        den = Poly(-den.as_expr(), T, domain="QQ")
        nums = [Poly(-n.as_expr(), T, domain="QQ") for n in nums]
    # no content stripping: a shared factor with sign changes would flip the
    # direction of the row somewhere on the domain
    return (nums[0], nums[1], nums[2]), den


def _deflate_at(nums: Sequence[Poly], t0: Fraction) -> tuple[Vec3, int]:
    """Divide (t - t0)^k out of all components; return the value at t0 and k."""
    r0 = as_rational(t0)
    lin = Poly(T - r0, T, domain="QQ")
    cur = list(nums)
    k = 0
    while all(p.eval(r0) == 0 for p in cur) and any(not p.is_zero for p in cur):
        cur = [p.quo(lin) for p in cur]
        k += 1
    val = tuple(as_fraction(p.eval(r0)) for p in cur)
    return val, k


@dataclass(frozen=True)
class FrenetData:
    """One-sided Frenet frames and osculating planes at one parameter.

    Unit vectors are floats; ``tangent_exact_*`` and ``binormal_exact_*``
    are unnormalized exact direction vectors (positive multiples of the
    corresponding one-sided limits) for downstream exact constructions.
    """

    param: Fraction
    point: Vec3
    tangent_exact_minus: Vec3
    tangent_exact_plus: Vec3
    binormal_exact_minus: Vec3
    binormal_exact_plus: Vec3

    @property
    def point_f(self) -> np.ndarray:
        return _fvec(self.point)

    @property
    def alpha_minus(self) -> np.ndarray:
        return _unit(_fvec(self.tangent_exact_minus))

    @property
    def alpha_plus(self) -> np.ndarray:
        return _unit(_fvec(self.tangent_exact_plus))

    @property
    def gamma_minus(self) -> np.ndarray:
        return _unit(_fvec(self.binormal_exact_minus))

    @property
    def gamma_plus(self) -> np.ndarray:
        return _unit(_fvec(self.binormal_exact_plus))

    @property
    def beta_minus(self) -> np.ndarray:
        return np.cross(self.gamma_minus, self.alpha_minus)

    @property
    def beta_plus(self) -> np.ndarray:
        return np.cross(self.gamma_plus, self.alpha_plus)

    def osc_plane(self, side: str) -> tuple[Vec3, Fraction]:
        """Exact (unnormalized normal, offset) of the one-sided osculating plane."""
        n = self.binormal_exact_minus if side == "-" else self.binormal_exact_plus
        off = sum(a * b for a, b in zip(n, self.point))
        return n, off


@dataclass(frozen=True)
class CurvatureTorsionProfile:
    """Cleared numerators/denominators whose sign profiles match kappa^2 and tau."""

    kappa_num: Poly
    kappa_den: Poly
    tau_num: Poly
    tau_den: Poly


class RationalCurve:
    """A rational parametric space curve on a closed interval."""

    def __init__(self, x: RationalFn, y: RationalFn, z: RationalFn,
                 domain: tuple[Fraction, Fraction], *, name: str = "",
                 _validated: bool = False):
        lo, hi = Fraction(domain[0]), Fraction(domain[1])
        if not lo < hi:
            raise DomainError(f"empty or reversed domain [{lo}, {hi}]")
        self.x, self.y, self.z = x, y, z
        self.domain = (lo, hi)
        self.name = name
        self._cache: dict = {}
        if not _validated:
            self._validate()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_coeffs(cls, x, y, z, domain, *, name: str = "") -> "RationalCurve":
        """Build from (num, den) ascending coefficient pairs per component."""
        def fn(pair):
            if isinstance(pair, RationalFn):
                return pair
            num, den = pair
            return RationalFn.from_coeffs(num, den)
        return cls(fn(x), fn(y), fn(z), domain, name=name)

    def _validate(self):
        lo, hi = self.domain
        for label, f in zip("xyz", self.components):
            if f.den.degree() > 0 and polyops.isolate_real_roots(f.den, lo, hi):
                raise DomainError(f"denominator of {label} has a root inside the domain")
        prof = self.curvature_torsion_profile()  # raises PlanarCurveError if flat
        del prof

    # -- basic data ----------------------------------------------------------

    @property
    def components(self) -> tuple[RationalFn, RationalFn, RationalFn]:
        return (self.x, self.y, self.z)

    def derivative(self, order: int) -> tuple[RationalFn, RationalFn, RationalFn]:
        """Componentwise derivative of the given order (cached)."""
        if order == 0:
            return self.components
        key = ("deriv", order)
        if key not in self._cache:
            prev = self.derivative(order - 1)
            self._cache[key] = tuple(f.deriv() for f in prev)
        return self._cache[key]

    def evaluate(self, tval: Fraction, order: int = 0) -> Vec3:
        """Exact point or derivative vector at a parameter value."""
        fns = self.derivative(order)
        return tuple(f(Fraction(tval)) for f in fns)

    def evaluate_float(self, ts: np.ndarray, order: int = 0) -> np.ndarray:
        """Float samples, shape (n, 3)."""
        fns = self.derivative(order)
        ts = np.asarray(ts, dtype=float)
        return np.stack([f.eval_float(ts) for f in fns], axis=-1)

    # -- cleared derivative rows --------------------------------------------

    def cleared_row(self, order: int) -> tuple[tuple[Poly, Poly, Poly], Poly]:
        """Numerator row of the order-th derivative over one denominator that
        is positive on the domain."""
        key = ("row", order)
        if key not in self._cache:
            mid = (self.domain[0] + self.domain[1]) / 2
            self._cache[key] = _clear_rows(self.derivative(order), mid)
        return self._cache[key]

    def cross_row(self) -> tuple[tuple[Poly, Poly, Poly], Poly]:
        """Cleared numerator row of r' x r'' with domain-positive denominator."""
        if "cross" not in self._cache:
            (a, b, c), d1den = self.cleared_row(1)
            (p, q, r), d2den = self.cleared_row(2)
            cx = Poly(b * r - c * q, T, domain="QQ")
            cy = Poly(c * p - a * r, T, domain="QQ")
            cz = Poly(a * q - b * p, T, domain="QQ")
            den = Poly(d1den * d2den, T, domain="QQ")  # positive times positive
            self._cache["cross"] = ((cx, cy, cz), den)
        return self._cache["cross"]

    # -- curvature / torsion -------------------------------------------------

    def curvature_torsion_profile(self) -> CurvatureTorsionProfile:
        """Polynomial sign profiles for kappa^2 and tau; raises on planar input."""
        if "profile" not in self._cache:
            (wx, wy, wz), wden = self.cross_row()
            kappa_num = Poly(wx**2 + wy**2 + wz**2, T, domain="QQ")
            kappa_den = Poly(wden**2, T, domain="QQ")
            if kappa_num.is_zero:
                raise PlanarCurveError("curve is a straight line (zero curvature)")
            (a1, a2, a3), den1 = self.cleared_row(1)
            (b1, b2, b3), den2 = self.cleared_row(2)
            (c1, c2, c3), den3 = self.cleared_row(3)
            det = (
                a1 * (b2 * c3 - b3 * c2)
                - a2 * (b1 * c3 - b3 * c1)
                + a3 * (b1 * c2 - b2 * c1)
            )
            tau_num = Poly(det, T, domain="QQ")
            if tau_num.is_zero:
                raise PlanarCurveError("planar curve unsupported: torsion vanishes identically")
            tau_den = Poly(den1 * den2 * den3, T, domain="QQ")
            g = tau_num.gcd(tau_den)
            if g.degree() > 0:
                # removable common factor; the ratio (hence the sign profile
                # away from denominator roots) is unchanged
                tau_num = tau_num.quo(g)
                tau_den = tau_den.quo(g)
            mid = (self.domain[0] + self.domain[1]) / 2
            if tau_den.eval(as_rational(mid)) < 0:
                tau_num = Poly(-tau_num.as_expr(), T, domain="QQ")
                tau_den = Poly(-tau_den.as_expr(), T, domain="QQ")
            self._cache["profile"] = CurvatureTorsionProfile(kappa_num, kappa_den, tau_num, tau_den)
        return self._cache["profile"]

    # -- Frenet frames -------------------------------------------------------

    def frenet(self, tval: Fraction) -> FrenetData:
        """One-sided Frenet data at an exact rational parameter.

        At regular points both sides coincide with the classical frame; at a
        parameter where r' or r' x r'' vanishes, the maximal linear factor is
        divided out exactly, which realizes the one-sided limits (the minus
        side picks up a sign flip for odd vanishing order).
        """
        tval = Fraction(tval)
        key = ("frenet", tval)
        if key in self._cache:
            return self._cache[key]
        point = self.evaluate(tval)
        an, _ = self.cleared_row(1)
        tan_val, k = _deflate_at(an, tval)
        if all(c == 0 for c in tan_val):
            raise PlanarCurveError("tangent direction undefined (degenerate component)")
        wn, _ = self.cross_row()
        bin_val, m = _deflate_at(wn, tval)
        if all(c == 0 for c in bin_val):
            raise PlanarCurveError("binormal direction undefined at this parameter")
        sgn_k = -1 if k % 2 else 1
        sgn_m = -1 if m % 2 else 1
        data = FrenetData(
            param=tval,
            point=point,
            tangent_exact_plus=tan_val,
            tangent_exact_minus=tuple(sgn_k * c for c in tan_val),
            binormal_exact_plus=bin_val,
            binormal_exact_minus=tuple(sgn_m * c for c in bin_val),
        )
        self._cache[key] = data
        return data

    # -- reparametrization ---------------------------------------------------

    def to_unit_domain(self) -> "RationalCurve":
        """Affinely map the domain onto [0, 1] without moving any point."""
        lo, hi = self.domain
        phi = polyops.poly_from_coeffs([lo, hi - lo], T)
        comps = [f.compose_poly(phi) for f in self.components]
        return RationalCurve(*comps, (Fraction(0), Fraction(1)), name=self.name, _validated=True)

    def restricted(self, lo: Fraction, hi: Fraction) -> "RationalCurve":
        """Same functions on a subinterval of the domain."""
        lo, hi = Fraction(lo), Fraction(hi)
        if not (self.domain[0] <= lo < hi <= self.domain[1]):
            raise DomainError("restriction outside the domain")
        return RationalCurve(self.x, self.y, self.z, (lo, hi), name=self.name, _validated=True)

    def mobius_reparametrized(self, a, b, c, d, new_domain) -> "RationalCurve":
        """Substitute t <- (a u + b)/(c u + d) and adopt the new domain."""
        comps = [f.compose_mobius(a, b, c, d) for f in self.components]
        return RationalCurve(*comps, tuple(Fraction(v) for v in new_domain), name=self.name)

    def __repr__(self):
        lo, hi = self.domain
        label = self.name or "curve"
        return f"RationalCurve<{label} on [{lo}, {hi}]>"
