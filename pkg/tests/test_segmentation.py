"""Tetrahedra, condition-bound searches, and quasi-cubic segment invariants."""

import random
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp

from certicurve import polyops
from certicurve.characters import build_vertex_list, find_flats
from certicurve.curves import RationalCurve
from certicurve.errors import (
    CertiCurveError,
    DegenerateTetrahedronError,
    DomainError,
    NoCertifiedBoundError,
)
from certicurve.segmentation import (
    associated_tetrahedron,
    condition_I_bound,
    condition_II_bound,
    condition_III_bound,
    condition_IV_bound,
    osculating_edge_ratios,
    segment_curve,
)
from test_curves import cusp_curve, loop_curve, twisted_cubic


def torsion_bump():
    # (t, t^3, t^4 - t^5): torsion numerator vanishes at 3/10, just
    # right of the domain start, so the first bound search must stop
    # strictly below it.
    return RationalCurve.from_coeffs(
        ([0, 1], [1]),
        ([0, 0, 0, 1], [1]),
        ([0, 0, 0, 0, 1, -1], [1]),
        (F(1, 8), F(1)),
        name="torsion-bump",
    )


def velocity_loop():
    # Lifted quartic whose velocity curve loops back on itself: the
    # condition-I quotient picks up an exact parallel-tangent root on
    # the first closing line, forcing at least one halving.
    return RationalCurve.from_coeffs(
        ([0, -1, 0, 1], [1]),
        ([0, 0, F(-1, 2), 0, F(1, 4)], [1]),
        ([0, 1], [8]),
        (F(-5, 4), F(3, 2)),
        name="velocity-loop",
    )


@pytest.fixture(scope="module")
def loop_segments():
    return segment_curve(loop_curve())


@pytest.fixture(scope="module")
def cusp_segments():
    return segment_curve(cusp_curve())


class TestAssociatedTetrahedron:
    def test_twisted_cubic_vertices(self):
        tet = associated_tetrahedron(twisted_cubic(), F(0), F(1))
        assert tet.r0 == (F(0), F(0), F(0))
        assert tet.r1 == (F(1, 3), F(0), F(0))
        assert tet.r2 == (F(2, 3), F(1, 3), F(0))
        assert tet.r3 == (F(1), F(1), F(1))

    def test_reversal_mirrors_vertex_roles(self):
        tet = associated_tetrahedron(twisted_cubic(), F(0), F(1))
        rev = twisted_cubic().mobius_reparametrized(-1, 1, 0, 1, (F(0), F(1)))
        mir = associated_tetrahedron(rev, F(0), F(1))
        assert (mir.r0, mir.r1, mir.r2, mir.r3) == (tet.r3, tet.r2, tet.r1, tet.r0)

    def test_midpoint_strictly_inside(self):
        tet = associated_tetrahedron(twisted_cubic(), F(0), F(1))
        bc = tet.barycentric(twisted_cubic().evaluate(F(1, 2)))
        assert all(0 < w < 1 for w in bc)
        assert sum(bc) == 1

    def test_degenerate_endpoints_rejected(self):
        # n(t1) . d(t0) for (t, t^3, t^4) is 2 (t1-t0)^2 (t1+2 t0),
        # which vanishes at (t0, t1) = (-1, 2).
        c = RationalCurve.from_coeffs(
            ([0, 1], [1]), ([0, 0, 0, 1], [1]), ([0, 0, 0, 0, 1], [1]),
            (F(-1), F(2)),
        )
        with pytest.raises(DegenerateTetrahedronError):
            associated_tetrahedron(c, F(-1), F(2))

    def test_bad_interval_rejected(self):
        with pytest.raises(DomainError):
            associated_tetrahedron(twisted_cubic(), F(1), F(0))


class TestConditionBounds:
    def test_twisted_cubic_full_reach(self):
        tw = twisted_cubic()
        for bound in (condition_I_bound, condition_II_bound,
                      condition_III_bound, condition_IV_bound):
            out = bound(tw, F(0), F(1))
            assert out.t_star == 1
            assert out.halvings == 0

    def test_cap_below_first_failure(self):
        out = condition_I_bound(torsion_bump(), F(1, 8), F(1, 4))
        assert out.t_star == F(1, 4)
        assert out.halvings == 0

    def test_tiny_cap_first_pass(self):
        out = condition_IV_bound(twisted_cubic(), F(0), F(1, 10**6))
        assert out.t_star == F(1, 10**6)
        assert out.halvings == 0

    def test_reach_stops_below_flat(self):
        c = torsion_bump()
        flats = [ri for ri, kind in find_flats(c)]
        assert len(flats) == 1 and flats[0].is_exact and flats[0].lo == F(3, 10)
        out = condition_I_bound(c, F(1, 8), F(1))
        # diagonal restriction first root at the flat: reach capped there,
        # then the closing line hits the root exactly, costing one halving
        assert out.delta1_star == F(3, 10) - F(1, 8)
        assert out.t_star == F(17, 80)
        assert out.t_star < F(3, 10)
        assert out.halvings == 1

    def test_closing_line_forces_halving(self):
        c = velocity_loop()
        out = condition_I_bound(c, F(-5, 4), F(3, 2))
        assert out.t_star == F(-3, 8)
        assert out.halvings >= 1
        assert out.delta1_star == F(11, 4)
        assert out.delta2_star == F(7, 4)

    def test_modes_agree_on_reach(self):
        for c in (torsion_bump(), velocity_loop()):
            t0, cap = c.domain
            a = condition_I_bound(c, t0, cap, mode="certified")
            b = condition_I_bound(c, t0, cap, mode="paper")
            assert a.t_star == b.t_star
            assert a.halvings == b.halvings

    def test_unknown_mode(self):
        with pytest.raises(CertiCurveError):
            condition_I_bound(twisted_cubic(), F(0), F(1), mode="fast")

    def test_empty_interval(self):
        with pytest.raises(DomainError):
            condition_I_bound(twisted_cubic(), F(1), F(1))


class TestSegmentCurve:
    def test_twisted_cubic_single_segment(self):
        segs = segment_curve(twisted_cubic())
        assert len(segs) == 1
        seg = segs[0]
        assert (seg.t0, seg.t1) == (F(0), F(1))
        assert [r.condition for r in seg.cert] == ["I", "II", "III", "IV"]
        assert all(r.search.t_star == 1 for r in seg.cert)

    def test_loop_cut_at_self_intersection(self, loop_segments):
        cuts = {s.t0 for s in loop_segments} | {s.t1 for s in loop_segments}
        assert F(-1) in cuts and F(1) in cuts
        assert F(0) in cuts

    def test_cusp_curve_cuts(self, cusp_segments):
        cuts = {s.t0 for s in cusp_segments} | {s.t1 for s in cusp_segments}
        # cusp at 0, cusp plus self-intersection at 1
        assert F(0) in cuts and F(1) in cuts

    def test_segments_tile_domain(self, loop_segments, cusp_segments):
        for segs in (loop_segments, cusp_segments):
            dom = segs[0].curve.domain
            assert segs[0].t0 == dom[0] and segs[-1].t1 == dom[1]
            for a, b in zip(segs, segs[1:]):
                assert a.t1 == b.t0
                assert a.t0 < a.t1

    def test_no_character_interior(self, loop_segments, cusp_segments):
        for segs in (loop_segments, cusp_segments):
            vl = build_vertex_list(segs[0].curve)
            for ref in vl.all_params:
                v = ref.value
                assert not any(s.t0 < v < s.t1 for s in segs)

    def test_segment_budget_enforced(self):
        with pytest.raises(NoCertifiedBoundError):
            segment_curve(velocity_loop(), max_segments_per_interval=1)


class TestSegmentInvariants:
    def test_containment(self, loop_segments, cusp_segments):
        for segs in (loop_segments, cusp_segments):
            c = segs[0].curve
            for seg in segs:
                ts = np.linspace(float(seg.t0), float(seg.t1), 1000)
                w = seg.tet.barycentric_f(c.evaluate_float(ts))
                assert w.min() >= -1e-9

    def test_hermite_data_exact(self, loop_segments, cusp_segments):
        for segs in (loop_segments, cusp_segments):
            for seg in segs:
                r0, r1, r2, r3 = seg.tet.vertices
                a0 = seg.frames[0].tangent_exact_plus
                a1 = seg.frames[1].tangent_exact_minus
                e0 = tuple(p - q for p, q in zip(r1, r0))
                e1 = tuple(p - q for p, q in zip(r3, r2))
                assert _cross(a0, e0) == (0, 0, 0)
                assert _cross(a1, e1) == (0, 0, 0)

    def test_osculating_planes_carry_faces(self, loop_segments):
        for seg in loop_segments:
            r0, r1, r2, r3 = seg.tet.vertices
            n0, _ = seg.frames[0].osc_plane("+")
            n1, _ = seg.frames[1].osc_plane("-")
            assert _dot(n0, _sub(r1, r0)) == 0
            assert _dot(n0, _sub(r2, r0)) == 0
            assert _dot(n1, _sub(r1, r3)) == 0
            assert _dot(n1, _sub(r2, r3)) == 0

    def test_edge_ratios_cubic_oracle(self):
        seg = segment_curve(twisted_cubic())[0]
        for i in range(1, 12):
            t = F(i, 12)
            assert osculating_edge_ratios(seg, t) == (t, t, t)

    def test_edge_ratios_monotone(self, loop_segments):
        seg = loop_segments[0]
        span = seg.t1 - seg.t0
        ks = [osculating_edge_ratios(seg, seg.t0 + F(i, 51) * span)
              for i in range(1, 51)]
        for j in range(3):
            col = [k[j] for k in ks]
            assert all(0 < v < 1 for v in col)
            assert all(a < b for a, b in zip(col, col[1:]))

    def test_nested_tetrahedra(self, cusp_segments):
        rng = random.Random(7)
        for seg in cusp_segments:
            c = seg.curve
            for _ in range(20):
                u0 = seg.t0 + F(rng.randrange(1, 999), 1000) * (seg.t1 - seg.t0)
                u1 = seg.t0 + F(rng.randrange(1, 999), 1000) * (seg.t1 - seg.t0)
                if u0 == u1:
                    continue
                sub = associated_tetrahedron(c, min(u0, u1), max(u0, u1))
                for v in sub.vertices:
                    assert all(w >= 0 for w in seg.tet.barycentric(v))

    def test_unique_parallel_point_per_chord_face(self, loop_segments):
        segs = [segment_curve(twisted_cubic())[0], loop_segments[0]]
        for seg in segs:
            _assert_one_interior_parallel_point(seg)


def _sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def _dot(p, q):
    return sum(a * b for a, b in zip(p, q))


def _cross(p, q):
    return (p[1] * q[2] - p[2] * q[1],
            p[2] * q[0] - p[0] * q[2],
            p[0] * q[1] - p[1] * q[0])


def _assert_one_interior_parallel_point(seg):
    # Each face plane through the chord r0 r3 is met tangentially once:
    # the cleared tangent row dotted with the face normal has exactly one
    # root strictly inside the segment, plus the forced endpoint root on
    # the face that carries that endpoint's tangent line.
    (ax, ay, az), _ = seg.curve.cleared_row(1)
    t = ax.gen
    arow = (ax.as_expr(), ay.as_expr(), az.as_expr())
    r0, r1, r2, r3 = seg.tet.vertices
    for apex, endpoint, far in ((r1, seg.t0, seg.t1), (r2, seg.t1, seg.t0)):
        m = _cross(_sub(apex, r0), _sub(r3, r0))
        f = sp.Poly(sp.expand(_dot([sp.Rational(x) for x in m], arow)), t)
        roots = polyops.isolate_real_roots(f, seg.t0, seg.t1)
        assert len(roots) == 2
        assert sum(1 for ri in roots if ri.is_exact and ri.lo == endpoint) == 1
        # both endpoint values pinned, so the second root sits strictly inside
        assert f.eval(sp.Rational(far)) != 0
