"""Cusps, self-intersections, flats, and vertex-list assembly."""

from fractions import Fraction as F

import numpy as np
import pytest

from certicurve.characters import (
    VertexKind,
    build_vertex_list,
    find_cusps,
    find_flats,
    find_self_intersections,
)
from certicurve.curves import RationalCurve
from certicurve.errors import ImproperCurveError

from test_curves import cusp_curve, loop_curve, twisted_cubic


def monomial_cusp():
    # (t^3, t^4, t^5): derivative vanishes to order two at the origin
    return RationalCurve.from_coeffs(
        ([0, 0, 0, 1], [1]), ([0, 0, 0, 0, 1], [1]), ([0, 0, 0, 0, 0, 1], [1]),
        (F(-1), F(1)))


class TestCusps:
    def test_keratoid_cusp(self):
        out = find_cusps(cusp_curve())
        assert len(out) == 1
        assert out[0].is_exact and out[0].lo == 1

    def test_twisted_cubic_clean(self):
        assert find_cusps(twisted_cubic()) == []

    def test_monomial_cusp_at_zero(self):
        out = find_cusps(monomial_cusp())
        assert len(out) == 1
        assert out[0].is_exact and out[0].lo == 0


class TestSelfIntersections:
    def test_keratoid_group(self):
        groups = find_self_intersections(cusp_curve())
        assert len(groups) == 1
        g = groups[0]
        assert g.exact
        assert [ri.lo for ri in g.params] == [0, 1]
        assert g.point == (F(0), F(0), F(0))

    def test_loop_group(self):
        groups = find_self_intersections(loop_curve())
        assert len(groups) == 1
        g = groups[0]
        assert g.exact
        assert [ri.lo for ri in g.params] == [-1, 1]
        assert g.point == (F(0), F(0), F(0))

    def test_twisted_cubic_empty(self):
        assert find_self_intersections(twisted_cubic()) == []

    def test_cusp_is_not_a_self_intersection(self):
        assert find_self_intersections(monomial_cusp()) == []

    def test_improper_curve_rejected(self):
        c = RationalCurve.from_coeffs(
            ([0, 0, 1], [1]), ([0, 0, 0, 0, 1], [1]), ([0, 0, 0, 0, 0, 0, 1], [1]),
            (F(-1), F(1)))
        with pytest.raises(ImproperCurveError):
            find_self_intersections(c)

    def test_sampling_finds_nothing_extra(self):
        c = loop_curve()
        lo, hi = float(c.domain[0]), float(c.domain[1])
        ts = np.linspace(lo, hi, 150)
        pts = c.evaluate_float(ts)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        sep = np.abs(ts[:, None] - ts[None, :])
        suspicious = np.argwhere((d < 1e-6) & (sep > 0.05))
        for i, j in suspicious:
            # every near-coincidence must be explained by the found group
            assert min(abs(ts[i] - v) for v in (-1.0, 1.0)) < 0.05
            assert min(abs(ts[j] - v) for v in (-1.0, 1.0)) < 0.05


class TestFlats:
    def test_twisted_cubic_empty(self):
        assert find_flats(twisted_cubic()) == []

    def test_planar_inflection_curve(self):
        c = RationalCurve.from_coeffs(
            ([0, 1], [1]), ([0, 0, 0, 1], [1]), ([0, 0, 0, 0, 1], [1]),
            (F(-1), F(1)))
        tags = find_flats(c)
        kinds = {kind for ri, kind in tags if ri.is_exact and ri.lo == 0}
        assert VertexKind.INFLECTION in kinds

    def test_planar_input_propagates(self):
        from certicurve.errors import PlanarCurveError
        with pytest.raises(PlanarCurveError):
            RationalCurve.from_coeffs(
                ([0, 1], [1]), ([0, 0, 1], [1]), ([0], [1]), (F(0), F(1)))


class TestVertexList:
    def test_twisted_cubic_endpoints_only(self):
        vl = build_vertex_list(twisted_cubic())
        assert len(vl.vertices) == 2
        assert vl.segmenting_params() == [F(0), F(1)]
        assert all(v.kind == VertexKind.ENDPOINT for v in vl.vertices)

    def test_loop_vertex(self):
        vl = build_vertex_list(loop_curve())
        assert vl.segmenting_params()[0] == F(-2)
        assert vl.segmenting_params()[-1] == F(2)
        sing = [v for v in vl.vertices if v.kind == VertexKind.SELF_INTERSECTION]
        assert len(sing) == 1
        assert sing[0].snapped == (F(-1), F(1))
        assert sing[0].point == (F(0), F(0), F(0))
        assert len(sing[0].frames) == 2

    def test_keratoid_vertex_kinds(self):
        vl = build_vertex_list(cusp_curve())
        cuspish = [v for v in vl.vertices if v.kind == VertexKind.CUSP]
        assert len(cuspish) == 1
        v = cuspish[0]
        assert v.snapped == (F(0), F(1))
        assert v.point == (F(0), F(0), F(0))
        assert v.kinds[0] == frozenset({VertexKind.SELF_INTERSECTION})
        assert VertexKind.CUSP in v.kinds[1]
        assert VertexKind.SELF_INTERSECTION in v.kinds[1]
        # flat tags at the cusp parameter are numerator artifacts
        assert VertexKind.INFLECTION not in v.kinds[1]

    def test_params_strictly_ascending_with_endpoints(self):
        for c in (loop_curve(), cusp_curve()):
            vl = build_vertex_list(c)
            ps = vl.segmenting_params()
            assert ps[0] == c.domain[0] and ps[-1] == c.domain[1]
            assert all(a < b for a, b in zip(ps, ps[1:]))

    def test_backrefs_consistent(self):
        vl = build_vertex_list(cusp_curve())
        for ref in vl.all_params:
            v = vl.vertices[ref.vertex]
            assert v.snapped[ref.slot] == ref.value
            assert v.kinds[ref.slot] == ref.kinds

    def test_inflection_vertex_dominates_torsion(self):
        c = RationalCurve.from_coeffs(
            ([0, 1], [1]), ([0, 0, 0, 1], [1]), ([0, 0, 0, 0, 1], [1]),
            (F(-1), F(1)))
        vl = build_vertex_list(c)
        flat = [v for v in vl.vertices
                if v.kind in (VertexKind.INFLECTION, VertexKind.TORSION_VANISHING)]
        zero = [v for v in flat if v.snapped == (F(0),)]
        assert len(zero) == 1
        assert zero[0].kind == VertexKind.INFLECTION
