"""Quasi-cubic segmentation with certified condition bounds.

A sub-arc [t0, t1] of a rational space curve is quasi-cubic when four
sign conditions hold throughout it: neither end tangent is parallel to
the osculating plane at the opposite parameter (I), the chord and the
two end tangents are never coplanar (II), neither arc point lies on the
osculating plane of the other parameter (III), and no three tangent
vectors in the arc are linearly dependent (IV).  Such an arc carries an
associated tetrahedron r0 r1 r2 r3 built from its end tangent lines and
end osculating planes, and the arc stays inside that tetrahedron.

Bounds for each condition come from exact polynomial work on cleared
determinant forms.  Every form vanishes identically on the coincidence
diagonal s1 = s2 to a fixed order; that forced factor is divided out
exactly.  First roots of the boundary restrictions (the diagonal and the
start edge) cap the candidate reach; each candidate is then validated by
a root check on the closing line s2 = t*, and the default mode adds a
Bernstein sign certificate over the full parameter box as a soundness
layer on top of that line check.  The reach is halved whenever a check
fails, so a closing line that meets a zero branch on the first pass
leaves a nonzero halving count in the returned search record.

Inter-vertex intervals are independent of each other; the greedy loop
inside one interval is sequential.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp

from . import polyops
from .characters import VertexKind, VertexList, build_vertex_list
from .curves import FrenetData, RationalCurve, T, Vec3, _fvec
from .errors import (
    CertiCurveError,
    DegenerateTetrahedronError,
    DomainError,
    NoCertifiedBoundError,
)

S1, S2, S3 = sp.symbols("s1 s2 s3")

HALVING_BUDGET = 40
# strip / corner exemption half-width: current reach / 2**COLLAR_SHIFT
COLLAR_SHIFT = 8
SEGMENT_EPS_SHIFT = 4  # t1 = t* - (t* - t0)/2**SEGMENT_EPS_SHIFT when t* < cap


def _sub(u: Vec3, v: Vec3) -> Vec3:
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def _dot(u: Vec3, v: Vec3) -> Fraction:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _cross(u: Vec3, v: Vec3) -> Vec3:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _det3(a: Vec3, b: Vec3, c: Vec3) -> Fraction:
    return _dot(a, _cross(b, c))


@dataclass(frozen=True)
class Tetrahedron:
    """Control tetrahedron with exact rational vertices."""

    r0: Vec3
    r1: Vec3
    r2: Vec3
    r3: Vec3

    def __post_init__(self):
        if self.volume_det() == 0:
            raise DegenerateTetrahedronError("coplanar tetrahedron vertices")

    @property
    def vertices(self) -> tuple[Vec3, Vec3, Vec3, Vec3]:
        return (self.r0, self.r1, self.r2, self.r3)

    @property
    def vertices_f(self) -> np.ndarray:
        return np.array([_fvec(v) for v in self.vertices])

    def volume_det(self) -> Fraction:
        return _det3(
            _sub(self.r1, self.r0), _sub(self.r2, self.r0), _sub(self.r3, self.r0)
        )

    def barycentric(self, p: Vec3) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Exact barycentric coordinates of ``p`` in r0 r1 r2 r3 order."""
        e1, e2, e3 = (_sub(v, self.r0) for v in (self.r1, self.r2, self.r3))
        q = _sub(p, self.r0)
        d = _det3(e1, e2, e3)
        b1 = _det3(q, e2, e3) / d
        b2 = _det3(e1, q, e3) / d
        b3 = _det3(e1, e2, q) / d
        return (1 - b1 - b2 - b3, b1, b2, b3)

    def barycentric_f(self, pts: np.ndarray) -> np.ndarray:
        """Float barycentric coordinates for an (n, 3) array of points."""
        vf = self.vertices_f
        m = (vf[1:] - vf[0]).T
        b = np.linalg.solve(m, (np.atleast_2d(pts) - vf[0]).T).T
        return np.column_stack([1.0 - b.sum(axis=1), b])


@dataclass(frozen=True)
class BoundarySearch:
    """Outcome of one condition-bound search from t0.

    ``delta1_star`` and ``delta2_star`` are the offsets of the first
    non-excused roots of the diagonal and start-edge restrictions
    (capped at the interval span); ``t_star`` is the certified reach.
    """

    delta1_star: Fraction
    delta2_star: Fraction
    t_star: Fraction
    halvings: int
    exemptions: int = 0


@dataclass(frozen=True)
class CertRecord:
    condition: str
    search: BoundarySearch


@dataclass(frozen=True)
class QuasiCubicSegment:
    curve: RationalCurve
    t0: Fraction
    t1: Fraction
    tet: Tetrahedron
    frames: tuple[FrenetData, FrenetData]
    cert: tuple[CertRecord, ...]


def associated_tetrahedron(c: RationalCurve, t0, t1) -> Tetrahedron:
    """Tetrahedron spanned by the arc ends, their tangent lines and
    osculating planes: r1 is the right tangent line at t0 cut by the left
    osculating plane at t1, r2 the left tangent line at t1 cut by the
    right osculating plane at t0."""
    t0, t1 = Fraction(t0), Fraction(t1)
    lo, hi = c.domain
    if not (lo <= t0 < t1 <= hi):
        raise DomainError(f"need {lo} <= t0 < t1 <= {hi}, got [{t0}, {t1}]")
    f0, f1 = c.frenet(t0), c.frenet(t1)
    r0, r3 = f0.point, f1.point
    d0 = f0.tangent_exact_plus
    d1 = f1.tangent_exact_minus
    n0 = f0.binormal_exact_plus
    n1 = f1.binormal_exact_minus

    den1 = _dot(n1, d0)
    if den1 == 0:
        raise DegenerateTetrahedronError(
            "tangent at t0 parallel to the osculating plane at t1"
        )
    lam = _dot(n1, _sub(r3, r0)) / den1
    r1 = tuple(a + lam * d for a, d in zip(r0, d0))

    den2 = _dot(n0, d1)
    if den2 == 0:
        raise DegenerateTetrahedronError(
            "tangent at t1 parallel to the osculating plane at t0"
        )
    mu = _dot(n0, _sub(r0, r3)) / den2
    r2 = tuple(a + mu * d for a, d in zip(r3, d1))

    if r1 == r2:
        raise DegenerateTetrahedronError("end tangent lines meet in a point")
    return Tetrahedron(r0, r1, r2, r3)


# ---------------------------------------------------------------------------
# condition determinant forms

def _row_exprs(nums: Sequence[sp.Poly], var: sp.Symbol) -> tuple:
    return tuple(p.as_expr().xreplace({T: var}) for p in nums)


def _det_expr(u, v, w) -> sp.Expr:
    return sp.expand(
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )


def _dot_expr(u, v) -> sp.Expr:
    return sp.expand(u[0] * v[0] + u[1] * v[1] + u[2] * v[2])


class _ConditionSystem:
    """Cleared condition forms for one curve, forced factors divided out.

    Cleared rows are positive multiples of the corresponding derivative
    or point vectors on the curve domain, so the zero sets of these forms
    match the geometric conditions exactly.
    """

    def __init__(self, c: RationalCurve):
        self.curve = c
        A, _ = c.cleared_row(1)
        B, _ = c.cleared_row(2)
        P, D0 = c.cleared_row(0)
        W, _ = c.cross_row()
        a1, a2, a3 = (_row_exprs(A, s) for s in (S1, S2, S3))
        b1, b2 = (_row_exprs(B, s) for s in (S1, S2))
        p1, p2 = (_row_exprs(P, s) for s in (S1, S2))
        w1, w2 = (_row_exprs(W, s) for s in (S1, S2))
        d01 = D0.as_expr().xreplace({T: S1})
        d02 = D0.as_expr().xreplace({T: S2})
        # cleared chord: positive multiple of r(s2) - r(s1)
        chord = tuple(sp.expand(q * d01 - p * d02) for p, q in zip(p1, p2))
        diag2 = (S2 - S1) ** 2
        self.base = {
            "Ia": self._quotient(_det_expr(a1, a2, b2), diag2, (S1, S2)),
            "Ib": self._quotient(_det_expr(a1, a2, b1), diag2, (S1, S2)),
            "II": self._quotient(_det_expr(a1, chord, a2), (S2 - S1) ** 4, (S1, S2)),
            "IIIa": self._quotient(_dot_expr(chord, w2), (S2 - S1) ** 3, (S1, S2)),
            "IIIb": self._quotient(_dot_expr(chord, w1), (S2 - S1) ** 3, (S1, S2)),
            "IV": self._quotient(
                _det_expr(a1, a2, a3),
                sp.expand((S2 - S1) * (S3 - S2) * (S3 - S1)),
                (S1, S2, S3),
            ),
        }
        self._prepared: dict = {}

    @staticmethod
    def _quotient(expr: sp.Expr, divisor: sp.Expr, gens) -> sp.Poly:
        quot, rem = sp.div(expr, divisor, *gens)
        if sp.expand(rem) != 0:
            raise CertiCurveError("forced diagonal factor fails to divide")
        return sp.Poly(quot, *gens, domain="QQ")

    def prepared(self, key: str, exact_chars: Sequence[Fraction]) -> sp.Poly:
        """Base form with exact character edge factors divided out.

        At an exact character value c a whole row of the determinant can
        vanish identically on the line s_i = c (a cusp annihilates the
        tangent row); removing every exact power of (s_i - c) leaves the
        one-sided deflated form whose sign carries the condition."""
        ck = (key, tuple(sorted(set(exact_chars))))
        if ck not in self._prepared:
            p = self.base[key]
            for cval in ck[1]:
                for g in p.gens:
                    p, _ = polyops.remove_factor(
                        p, sp.Poly(g - sp.Rational(cval), *p.gens, domain="QQ")
                    )
            self._prepared[ck] = p
        return self._prepared[ck]


def _condition_system(c: RationalCurve) -> _ConditionSystem:
    if "condsys" not in c._cache:
        c._cache["condsys"] = _ConditionSystem(c)
    return c._cache["condsys"]


# ---------------------------------------------------------------------------
# boundary searches

@dataclass(frozen=True)
class _CharInfo:
    """A character parameter sitting at an interval end."""

    value: Fraction            # snapped rational representative
    exact: bool
    is_cusp: bool
    isolation: tuple[Fraction, Fraction]

    @classmethod
    def from_ref(cls, ref) -> "_CharInfo":
        return cls(
            value=ref.value,
            exact=ref.interval.is_exact,
            is_cusp=VertexKind.CUSP in ref.kinds,
            isolation=(ref.interval.lo, ref.interval.hi),
        )


def _substitute(p: sp.Poly, repl: dict) -> sp.Expr:
    return p.as_expr().xreplace({k: sp.Rational(v) for k, v in repl.items()})


def _univariate(expr: sp.Expr, var: sp.Symbol) -> sp.Poly | None:
    expr = sp.expand(expr)
    if expr == 0:
        return None
    return sp.Poly(expr, var, domain="QQ")


def _excused_root(
    p: sp.Poly,
    ri: polyops.RootInterval,
    chars: Sequence[_CharInfo],
    collar: Fraction,
) -> bool:
    """Whether a root interval is a character's own zero.

    A root is excused when its interval contains an exact character
    value at which p vanishes, or lies inside the collar of an inexact
    one.  The zero branches a character sheds cross the restriction
    lines a few snap widths away from the snapped value, so the collar
    is a span-proportional radius rather than the isolation interval
    itself; the certificate's corner exemption ball covers the same
    zone."""
    for ch in chars:
        if ch.exact:
            if ri.lo <= ch.value <= ri.hi and p.eval(sp.Rational(ch.value)) == 0:
                return True
        elif ch.isolation[0] - collar <= ri.lo and ri.hi <= ch.isolation[1] + collar:
            return True
    return False


def _first_clean_root(
    p: sp.Poly | None,
    t0: Fraction,
    cap: Fraction,
    chars: Sequence[_CharInfo],
) -> Fraction:
    """Lower bound of the first root of ``p`` in (t0, cap] that is not a
    character's own zero; ``cap`` when there is none."""
    if p is None:
        return cap
    collar = (cap - t0) / 2**24
    for ri in polyops.isolate_real_roots(p, t0, cap):
        ri = polyops.refine_root(p, ri, collar / 4)
        if ri.hi <= t0:
            continue
        if _excused_root(p, ri, chars, collar):
            continue
        return max(ri.lo, t0)
    return cap


def _closing_line_clean(
    p: sp.Poly, t_star: Fraction, t0: Fraction, chars: Sequence[_CharInfo]
) -> bool:
    """Root check on the closing line s2 = t* for a bivariate form.

    The restricted univariate must have no non-excused root across the
    closed span [t0, t*]; in particular a restriction root sitting
    exactly at t* puts a zero on the line's endpoint and fails the
    check.  An identically vanishing restriction is a failure too."""
    line = _univariate(_substitute(p, {p.gens[1]: t_star}), p.gens[0])
    if line is None:
        return False
    collar = (t_star - t0) / 2**24
    for ri in polyops.isolate_real_roots(line, t0, t_star):
        ri = polyops.refine_root(line, ri, collar / 4)
        if not _excused_root(line, ri, chars, collar):
            return False
    return True


def _bound_search(
    sys: _ConditionSystem,
    keys: Sequence[str],
    t0,
    cap,
    *,
    chars: Sequence[_CharInfo] = (),
    mode: str = "certified",
    halving_budget: int = HALVING_BUDGET,
) -> BoundarySearch:
    """Shared search scheme for conditions I to IV.

    The first non-excused roots of the diagonal and start-edge
    restrictions cap the initial reach; each candidate reach is then
    validated by a root check on the closing line (bivariate forms) and,
    in certified mode, a Bernstein sign certificate over the whole
    parameter box.  Any failed check halves the reach, so a restriction
    root at the candidate boundary shows up as a recorded halving."""
    t0, cap = Fraction(t0), Fraction(cap)
    lo, hi = sys.curve.domain
    if not (lo <= t0 < cap <= hi):
        raise DomainError(f"need {lo} <= t0 < cap <= {hi}, got t0={t0}, cap={cap}")
    if mode not in ("certified", "paper"):
        raise CertiCurveError(f"unknown search mode {mode!r}")
    exact_chars = [ch.value for ch in chars if ch.exact]
    polys = [sys.prepared(k, exact_chars) for k in keys]
    dim = len(polys[0].gens)
    s = sp.Symbol("s")

    d1_root = cap
    d2_root = cap
    for p in polys:
        gens = p.gens
        diag = _univariate(_substitute_syms(p, {g: s for g in gens}), s)
        d1_root = min(d1_root, _first_clean_root(diag, t0, cap, chars))
        edges = [_univariate(_substitute_syms(p, {gens[0]: sp.Rational(t0), **{g: s for g in gens[1:]}}), s)]
        if dim == 3:
            edges.append(_univariate(
                _substitute_syms(p, {gens[0]: sp.Rational(t0), gens[1]: sp.Rational(t0), gens[2]: s}), s))
        for e in edges:
            d2_root = min(d2_root, _first_clean_root(e, t0, cap, chars))

    delta1_star = d1_root - t0
    delta2_star = d2_root - t0
    delta = min(cap, d1_root, d2_root) - t0
    if delta <= 0:
        raise NoCertifiedBoundError(
            f"condition {'/'.join(keys)} fails immediately right of t0={t0}"
        )

    def prune2(b):
        return b[0][0] > b[1][1]

    def prune3(b):
        return b[0][0] > b[1][1] or b[1][0] > b[2][1]

    prune = prune2 if dim == 2 else prune3

    halvings = 0
    while True:
        t_star = t0 + delta
        scale = delta / 2**COLLAR_SHIFT
        corner_vals = [ch.value for ch in chars if t0 - scale <= ch.value <= t_star + scale]
        exempt_pts = [(v,) * dim for v in corner_vals]
        strip_vals = [ch.value for ch in chars
                      if ch.is_cusp and not ch.exact
                      and t0 - scale <= ch.value <= t_star + scale]
        box = [(t0, t_star)] * dim
        n_exempt = 0
        ok = True
        for p in polys:
            if dim == 2 and not _closing_line_clean(p, t_star, t0, chars):
                ok = False
                break
            if mode == "paper" and dim == 2:
                # the diagonal and start edge are root-free up to t* by
                # choice of delta and the closing line was just checked
                continue
            # a corner box must shrink to the exemption scale on every
            # axis before it can be excused, so the depth budget scales
            # with the dimension
            out = polyops.certify_nonvanishing_box(
                p,
                box,
                exempt_points=exempt_pts,
                exempt_values=strip_vals,
                exempt_scale=scale,
                prune=prune,
                max_depth=dim * (COLLAR_SHIFT + 2),
                max_nodes=6000,
            )
            if not out.certified:
                ok = False
                break
            n_exempt += len(out.exemptions)
        if ok:
            return BoundarySearch(
                delta1_star=min(delta1_star, cap - t0),
                delta2_star=min(delta2_star, cap - t0),
                t_star=t_star,
                halvings=halvings,
                exemptions=n_exempt,
            )
        halvings += 1
        if halvings > halving_budget:
            raise NoCertifiedBoundError(
                f"halving budget exhausted for condition {'/'.join(keys)} at t0={t0}"
            )
        delta = delta / 2


def _substitute_syms(p: sp.Poly, repl: dict) -> sp.Expr:
    return p.as_expr().xreplace(repl)


def condition_I_bound(c: RationalCurve, t0, t_cap, *, chars=(), mode="certified") -> BoundarySearch:
    """Reach within which neither end tangent is parallel to the other
    end's osculating plane, for every parameter pair."""
    return _bound_search(_condition_system(c), ("Ia", "Ib"), t0, t_cap, chars=chars, mode=mode)


def condition_II_bound(c: RationalCurve, t0, t_cap, *, chars=(), mode="certified") -> BoundarySearch:
    """Reach within which the chord and the two end tangents are never
    coplanar, for every parameter pair."""
    return _bound_search(_condition_system(c), ("II",), t0, t_cap, chars=chars, mode=mode)


def condition_III_bound(c: RationalCurve, t0, t_cap, *, chars=(), mode="certified") -> BoundarySearch:
    """Reach within which neither arc point lies on the osculating plane
    at the other parameter."""
    return _bound_search(_condition_system(c), ("IIIa", "IIIb"), t0, t_cap, chars=chars, mode=mode)


def condition_IV_bound(c: RationalCurve, t0, t_cap, *, chars=(), mode="certified") -> BoundarySearch:
    """Reach within which no three tangent vectors are linearly
    dependent.  Always certified on the full parameter box; the start
    face s1 = t0 enters through its own edge restrictions."""
    return _bound_search(_condition_system(c), ("IV",), t0, t_cap, chars=chars, mode="certified")


# ---------------------------------------------------------------------------
# segmentation driver

def osculating_edge_ratios(seg: QuasiCubicSegment, tval) -> tuple[Fraction, Fraction, Fraction]:
    """Exact ratios along edges r0r1, r1r2, r2r3 at which the osculating
    plane at ``tval`` cuts them."""
    tval = Fraction(tval)
    n, off = seg.curve.frenet(tval).osc_plane("-" if tval == seg.t1 else "+")
    r0, r1, r2, r3 = seg.tet.vertices

    def cut(p, q):
        dn = _dot(n, _sub(q, p))
        if dn == 0:
            raise CertiCurveError("osculating plane parallel to a tetrahedron edge")
        return (off - _dot(n, p)) / dn

    return (cut(r0, r1), cut(r1, r2), cut(r2, r3))


def segment_curve(
    c: RationalCurve,
    vl: VertexList | None = None,
    *,
    mode: str = "certified",
    max_segments_per_interval: int = 64,
    retry_budget: int = 8,
) -> tuple[QuasiCubicSegment, ...]:
    """Greedy maximal quasi-cubic segmentation between vertex parameters.

    Within each inter-vertex interval the four condition bounds give a
    certified reach t*; the cut goes at t* less a proportional margin,
    or exactly at the interval end when the reach attains it (conditions
    hold one-sidedly at character endpoints).  Degenerate tetrahedra
    trigger interval shrinking within a retry budget."""
    if vl is None:
        vl = build_vertex_list(c)
    sys = _condition_system(c)
    segments: list[QuasiCubicSegment] = []
    params = vl.all_params
    for ref_a, ref_b in zip(params, params[1:]):
        a, b = ref_a.value, ref_b.value
        chars = tuple(
            _CharInfo.from_ref(r)
            for r in (ref_a, ref_b)
            if r.kinds - {VertexKind.ENDPOINT, VertexKind.PLAIN_SEGMENTING}
        )
        t0 = a
        count = 0
        while t0 < b:
            count += 1
            if count > max_segments_per_interval:
                raise NoCertifiedBoundError(
                    f"more than {max_segments_per_interval} segments on [{a}, {b}]"
                )
            records = []
            cap123 = b
            for name, keys in (("I", ("Ia", "Ib")), ("II", ("II",)), ("III", ("IIIa", "IIIb"))):
                srch = _bound_search(sys, keys, t0, b, chars=chars, mode=mode)
                records.append(CertRecord(name, srch))
                cap123 = min(cap123, srch.t_star)
            srch4 = _bound_search(sys, ("IV",), t0, cap123, chars=chars, mode="certified")
            records.append(CertRecord("IV", srch4))
            t_star = srch4.t_star

            t1 = b if t_star >= b else t_star - (t_star - t0) / 2**SEGMENT_EPS_SHIFT
            tet = None
            for _ in range(retry_budget):
                try:
                    tet = associated_tetrahedron(c, t0, t1)
                    break
                except DegenerateTetrahedronError:
                    t1 = t0 + (t1 - t0) / 2
            if tet is None:
                raise DegenerateTetrahedronError(
                    f"no non-degenerate tetrahedron on [{a}, {b}] starting at {t0}"
                )
            segments.append(
                QuasiCubicSegment(
                    curve=c,
                    t0=t0,
                    t1=t1,
                    tet=tet,
                    frames=(c.frenet(t0), c.frenet(t1)),
                    cert=tuple(records),
                )
            )
            t0 = t1
    return tuple(segments)
