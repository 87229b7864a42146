"""Character points of a rational space curve and the extended vertex list.

Character points are the parameters a segmentation must respect: cusps,
self-intersections, inflections (vanishing curvature) and torsion zeros.
Cusps fall out of the gcd of the derivative numerators.  Self-intersections
come from the deflated difference system r(s) = r(t), s != t: clearing
denominators, dividing the forced diagonal factor (s - t) out of each
component, eliminating s by pairwise resultants, and verifying candidate
parameter pairs.  Verification is exact for rational parameters; algebraic
candidates are confirmed by deep interval refinement instead of number
field arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np
from sympy import Poly, symbols

from . import polyops
from .curves import FrenetData, RationalCurve, T, Vec3
from .errors import ImproperCurveError, TopologyUnresolvedError
from .polyops import RootInterval, as_rational

F = Fraction
S = symbols("s")

DEEP_WIDTH = F(1, 10**40)
NEAR_TOL = 1e-30


class VertexKind(IntEnum):
    """Character kinds; numeric value doubles as severity for merging."""

    PLAIN_SEGMENTING = 0
    ENDPOINT = 1
    TORSION_VANISHING = 2
    INFLECTION = 3
    SELF_INTERSECTION = 4
    CUSP = 5


def default_width(c: RationalCurve) -> Fraction:
    lo, hi = c.domain
    return (hi - lo) / 10**12


# ---------------------------------------------------------------------------
# cusps


def find_cusps(c: RationalCurve, width: Fraction | None = None) -> list[RootInterval]:
    """Parameters where r' vanishes as a vector.

    The cleared numerator row of r' differs from the true componentwise
    numerators by factors without roots in the domain, so its gcd has the
    same in-domain roots.
    """
    (a1, a2, a3), _ = c.cleared_row(1)
    g = polyops.poly_gcd(a1, a2, a3)
    if g.degree() <= 0:
        return []
    lo, hi = c.domain
    return polyops.isolate_real_roots(g, lo, hi, width or default_width(c))


# ---------------------------------------------------------------------------
# self-intersections


@dataclass(frozen=True)
class SelfIntersectionGroup:
    """Two or more parameters mapping to one point."""

    params: tuple[RootInterval, ...]
    point: Vec3
    exact: bool


def _difference_system(c: RationalCurve) -> list[Poly]:
    """Deflated numerators h_i(s,t) of (r_i(s) - r_i(t)) / (s - t)."""
    out = []
    for f in c.components:
        ns = Poly(f.num.as_expr().subs(T, S), S, T, domain="QQ")
        nt = Poly(f.num.as_expr(), S, T, domain="QQ")
        ds = Poly(f.den.as_expr().subs(T, S), S, T, domain="QQ")
        dt = Poly(f.den.as_expr(), S, T, domain="QQ")
        raw = ns * dt - nt * ds
        if raw.is_zero:
            out.append(raw)
            continue
        quot, _ = polyops.remove_factor(raw, Poly(S - T, S, T, domain="QQ"))
        out.append(quot)
    return out


def _rational_partners(c: RationalCurve, hs: list[Poly], tval: Fraction,
                       width: Fraction) -> list[RootInterval]:
    """In-domain s-roots shared by every difference component at t = tval."""
    lo, hi = c.domain
    g = None
    for h in hs:
        if h.is_zero:
            continue
        hu = Poly(h.as_expr().subs(T, as_rational(tval)), S, domain="QQ")
        if hu.is_zero:
            continue  # cannot happen for a nonzero h; contributes no constraint
        g = hu if g is None else g.gcd(hu)
        if g.degree() <= 0:
            return []
    if g is None or g.degree() <= 0:
        return []
    return polyops.isolate_real_roots(g, lo, hi, width)


def _elimination_candidates(live: list[Poly]) -> Poly | None:
    """One univariate polynomial in t whose roots cover every t-projection
    of the common zeros of the difference system.

    Pairwise resultants suffice generically.  A resultant that vanishes
    identically signals a shared factor between two components (for
    instance two even components share the branch s = -t); the shared
    factor is then intersected with the remaining components separately.
    A factor common to the whole system means the curve retraces itself.
    """
    total = live[0]
    for h in live[1:]:
        total = total.gcd(h)
    if total.degree(S) > 0 or total.degree(T) > 0:
        raise ImproperCurveError("curve not proper")

    elims: list[Poly] = []
    branch_gs: list[Poly] = []
    n = len(live)
    for i in range(n):
        for j in range(i + 1, n):
            r = polyops.resultant(live[i], live[j], S)
            if not r.is_zero:
                elims.append(r)
                continue
            shared = live[i].gcd(live[j])
            others = [live[k] for k in range(n) if k not in (i, j)]
            branch = [polyops.resultant(shared, o, S) for o in others]
            branch = [b for b in branch if not b.is_zero]
            if not branch:
                raise ImproperCurveError("curve not proper")
            bg = branch[0]
            for b in branch[1:]:
                bg = bg.gcd(b)
            branch_gs.append(bg)

    g = None
    for r in elims:
        g = r if g is None else g.gcd(r)
    pieces = ([g] if g is not None and g.degree() > 0 else []) + \
        [b for b in branch_gs if b.degree() > 0]
    if not pieces:
        return None
    acc = pieces[0]
    for p in pieces[1:]:
        acc = Poly(acc * p, T, domain="QQ")
    return acc


def find_self_intersections(c: RationalCurve,
                            width: Fraction | None = None) -> list[SelfIntersectionGroup]:
    """All parameter groups with coinciding points, t values distinct."""
    width = width or default_width(c)
    lo, hi = c.domain
    hs = _difference_system(c)
    live = [h for h in hs if not h.is_zero]
    if len(live) < 2:
        raise ImproperCurveError("curve not proper")
    g = _elimination_candidates(live)
    if g is None or g.degree() <= 0:
        return []

    candidates = polyops.isolate_real_roots(g, lo, hi, width)
    if not candidates:
        return []

    # union-find over candidate slots
    parent = list(range(len(candidates)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        parent[find(i)] = find(j)

    exact_ok = [False] * len(candidates)
    for i, ri in enumerate(candidates):
        if not ri.is_exact:
            continue
        partners = _rational_partners(c, hs, ri.lo, width)
        base = c.evaluate(ri.lo)
        for pr in partners:
            if pr.is_exact:
                if pr.lo == ri.lo:
                    continue
                if c.evaluate(pr.lo) == base:
                    for j, rj in enumerate(candidates):
                        if rj.is_exact and rj.lo == pr.lo:
                            union(i, j)
                            exact_ok[i] = exact_ok[j] = True

    # algebraic candidates: deep refinement, then float matching
    deep = []
    derived_from = {}
    for i, ri in enumerate(candidates):
        if ri.is_exact or exact_ok[i]:
            deep.append(ri)
            continue
        q, _ = polyops.signed_sqf_factor(g, ri)
        rj = polyops.refine_root(q, ri, min(width, DEEP_WIDTH))
        deep.append(rj)
        derived_from[i] = rj
    for i in derived_from:
        pi = c.evaluate_float(np.array([float(deep[i].mid)]))[0]
        for j in range(len(candidates)):
            if i == j:
                continue
            pj = c.evaluate_float(np.array([float(deep[j].mid)]))[0]
            if float(np.max(np.abs(pi - pj))) < NEAR_TOL ** 0.5:
                union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(len(candidates)):
        groups.setdefault(find(i), []).append(i)

    out = []
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort(key=lambda i: (candidates[i].lo, candidates[i].hi))
        ivs = tuple(deep[i] for i in members)
        exact = all(candidates[i].is_exact for i in members)
        if exact:
            point = c.evaluate(candidates[members[0]].lo)
        else:
            anchor = next((i for i in members if candidates[i].is_exact), members[0])
            point = tuple(F(float(v)).limit_denominator(10**15)
                          for v in c.evaluate_float(np.array([float(deep[anchor].mid)]))[0])
        out.append(SelfIntersectionGroup(params=ivs, point=point, exact=exact))
    out.sort(key=lambda grp: (grp.params[0].lo, grp.params[0].hi))
    return out


# ---------------------------------------------------------------------------
# flats


def find_flats(c: RationalCurve,
               width: Fraction | None = None) -> list[tuple[RootInterval, VertexKind]]:
    """Roots of the curvature and torsion numerators, tagged by kind."""
    width = width or default_width(c)
    lo, hi = c.domain
    prof = c.curvature_torsion_profile()
    out = []
    if prof.kappa_num.degree() > 0:
        for ri in polyops.isolate_real_roots(prof.kappa_num, lo, hi, width):
            out.append((ri, VertexKind.INFLECTION))
    if prof.tau_num.degree() > 0:
        for ri in polyops.isolate_real_roots(prof.tau_num, lo, hi, width):
            out.append((ri, VertexKind.TORSION_VANISHING))
    out.sort(key=lambda pair: (pair[0].lo, pair[0].hi))
    return out


# ---------------------------------------------------------------------------
# vertex list


@dataclass(frozen=True)
class ExtendedVertex:
    """One geometric vertex: a point with all parameters mapping to it.

    ``frames[i]`` carries both one-sided frames at ``snapped[i]``; the
    minus/plus split of the interface is realized by FrenetData's sides.
    """

    point: Vec3
    params: tuple[RootInterval, ...]
    snapped: tuple[Fraction, ...]
    kinds: tuple[frozenset, ...]
    frames: tuple[FrenetData, ...]

    @property
    def kind(self) -> VertexKind:
        return max((k for ks in self.kinds for k in ks), default=VertexKind.PLAIN_SEGMENTING)

    @property
    def frames_minus(self) -> tuple[FrenetData, ...]:
        return self.frames

    @property
    def frames_plus(self) -> tuple[FrenetData, ...]:
        return self.frames


@dataclass(frozen=True)
class ParamRef:
    """One globally sorted parameter with its owning vertex."""

    value: Fraction
    interval: RootInterval
    kinds: frozenset
    vertex: int
    slot: int


@dataclass(frozen=True)
class VertexList:
    vertices: tuple[ExtendedVertex, ...]
    all_params: tuple[ParamRef, ...]
    domain: tuple[Fraction, Fraction]

    def segmenting_params(self) -> list[Fraction]:
        return [p.value for p in self.all_params]


class _RawParam:
    __slots__ = ("interval", "poly", "kinds", "group")

    def __init__(self, interval: RootInterval, poly: Poly | None, kinds, group=None):
        self.interval = interval
        self.poly = poly
        self.kinds = set(kinds)
        self.group = group


def _coincide_or_separate(a: _RawParam, b: _RawParam) -> bool:
    """True when the two raw parameters are provably one value; otherwise
    refines both intervals until disjoint.  Raises when neither works."""
    for _ in range(64):
        ia, ib = a.interval, b.interval
        if ia.hi < ib.lo or ib.hi < ia.lo:
            return False
        if ia.is_exact and ib.is_exact:
            return ia.lo == ib.lo
        if a.poly is not None and b.poly is not None:
            g = a.poly.gcd(b.poly)
            if g.degree() > 0:
                common = polyops.isolate_real_roots(
                    g, min(ia.lo, ib.lo), max(ia.hi, ib.hi))
                if common:
                    return True
        for rp in (a, b):
            if not rp.interval.is_exact and rp.poly is not None:
                q, _ = polyops.signed_sqf_factor(rp.poly, rp.interval)
                w = (rp.interval.hi - rp.interval.lo) / 16
                if w > 0:
                    rp.interval = polyops.refine_root(q, rp.interval, w)
        ia, ib = a.interval, b.interval
        if ia.is_exact and not ib.is_exact and not ib.contains(ia.lo):
            return False
        if ib.is_exact and not ia.is_exact and not ia.contains(ib.lo):
            return False
    raise TopologyUnresolvedError(
        "could not separate or merge near-coincident character parameters")


def build_vertex_list(c: RationalCurve, width: Fraction | None = None) -> VertexList:
    """Merge cusps, self-intersections, flats, and endpoints into the
    sorted vertex list with one-sided frames attached per parameter."""
    width = width or default_width(c)
    lo, hi = c.domain

    raw: list[_RawParam] = []
    raw.append(_RawParam(RootInterval(lo, lo, 1), None, {VertexKind.ENDPOINT}))
    raw.append(_RawParam(RootInterval(hi, hi, 1), None, {VertexKind.ENDPOINT}))

    (a1, a2, a3), _ = c.cleared_row(1)
    cusp_poly = polyops.poly_gcd(a1, a2, a3)
    for ri in find_cusps(c, width):
        raw.append(_RawParam(ri, cusp_poly, {VertexKind.CUSP}))

    groups = find_self_intersections(c, width)
    group_points = {}
    for gi, grp in enumerate(groups):
        group_points[gi] = (grp.point, grp.exact)
        for ri in grp.params:
            raw.append(_RawParam(ri, None, {VertexKind.SELF_INTERSECTION}, group=gi))

    prof = c.curvature_torsion_profile()
    for ri, kind in find_flats(c, width):
        poly = prof.kappa_num if kind == VertexKind.INFLECTION else prof.tau_num
        raw.append(_RawParam(ri, poly, {kind}))

    # merge coincident raw params into slots
    raw.sort(key=lambda rp: (rp.interval.lo, rp.interval.hi))
    slots: list[_RawParam] = []
    for rp in raw:
        merged = False
        for sl in slots:
            if _coincide_or_separate(sl, rp):
                sl.kinds |= rp.kinds
                if sl.group is None:
                    sl.group = rp.group
                if sl.poly is None:
                    sl.poly = rp.poly
                if rp.interval.is_exact and not sl.interval.is_exact:
                    sl.interval = rp.interval
                merged = True
                break
        if not merged:
            slots.append(rp)

    # a cusp annihilates the curvature and torsion numerators by itself, so
    # flat tags at a cusp parameter are artifacts, not geometry
    for sl in slots:
        if VertexKind.CUSP in sl.kinds:
            sl.kinds -= {VertexKind.INFLECTION, VertexKind.TORSION_VANISHING}

    slots.sort(key=lambda rp: (rp.interval.lo, rp.interval.hi))
    snapped: list[Fraction] = []
    for sl in slots:
        if sl.interval.is_exact:
            snapped.append(sl.interval.lo)
        else:
            snapped.append(max(lo, min(hi, sl.interval.mid)))
    for a, b in zip(snapped, snapped[1:]):
        if not a < b:
            raise TopologyUnresolvedError("snapped parameters failed to separate")

    # group slots into vertices
    vertex_of_slot: dict[int, int] = {}
    vertices_spec: list[dict] = []
    by_group: dict[int, list[int]] = {}
    for i, sl in enumerate(slots):
        if sl.group is not None:
            by_group.setdefault(sl.group, []).append(i)
    for gi, idxs in sorted(by_group.items()):
        v = {"slots": idxs, "point": group_points[gi][0]}
        for i in idxs:
            vertex_of_slot[i] = len(vertices_spec)
        vertices_spec.append(v)
    for i, sl in enumerate(slots):
        if i in vertex_of_slot:
            continue
        vertex_of_slot[i] = len(vertices_spec)
        vertices_spec.append({"slots": [i], "point": c.evaluate(snapped[i])})

    frames = [c.frenet(v) for v in snapped]

    vertices: list[ExtendedVertex] = []
    order = sorted(range(len(vertices_spec)),
                   key=lambda vi: min(vertices_spec[vi]["slots"]))
    vertex_renum = {}
    for new_i, vi in enumerate(order):
        spec = vertices_spec[vi]
        idxs = sorted(spec["slots"])
        vertices.append(ExtendedVertex(
            point=spec["point"],
            params=tuple(slots[i].interval for i in idxs),
            snapped=tuple(snapped[i] for i in idxs),
            kinds=tuple(frozenset(slots[i].kinds) for i in idxs),
            frames=tuple(frames[i] for i in idxs),
        ))
        vertex_renum[vi] = new_i

    all_params = []
    for i, sl in enumerate(slots):
        v_new = vertex_renum[vertex_of_slot[i]]
        slot_pos = sorted(vertices_spec[vertex_of_slot[i]]["slots"]).index(i)
        all_params.append(ParamRef(
            value=snapped[i], interval=sl.interval,
            kinds=frozenset(sl.kinds), vertex=v_new, slot=slot_pos))
    return VertexList(vertices=tuple(vertices), all_params=tuple(all_params),
                      domain=c.domain)
