"""Topology certification, B-spline conversion, and the full pipeline."""

import json
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

from certicurve.approximate import fit_piece
from certicurve.assembly import (
    BSplineCurve,
    certify,
    check_topology,
    interiors_disjoint,
    to_bspline,
)
from certicurve.bezier import RationalCubicBezier
from certicurve.characters import VertexKind
from certicurve.curves import RationalCurve
from certicurve.errors import (
    CertiCurveError,
    DomainError,
    NonConvergentError,
    TopologyUnresolvedError,
)
from certicurve.segmentation import Tetrahedron, segment_curve

CURVE_DIR = Path(__file__).resolve().parents[1] / "curves"


def load_spec(name):
    doc = json.loads((CURVE_DIR / f"{name}.json").read_text())
    comps = [(list(map(F, doc[ax]["num"])), list(map(F, doc[ax]["den"])))
             for ax in "xyz"]
    lo, hi = (F(v) for v in doc["interval"])
    return RationalCurve.from_coeffs(*comps, (lo, hi), name=doc.get("name", name))


def twisted_cubic():
    return RationalCurve.from_coeffs(
        ([0, 1], [1]), ([0, 0, 1], [1]), ([0, 0, 0, 1], [1]),
        (F(0), F(1)), name="twisted-cubic")


def tet(*rows):
    return Tetrahedron(*(tuple(F(c) for c in r) for r in rows))


UNIT = tet((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


@pytest.fixture(scope="module")
def twisted_bez():
    seg = segment_curve(twisted_cubic())[0]
    return fit_piece(seg, 80).bezier


@pytest.fixture(scope="module")
def sextic_bez():
    seg = segment_curve(load_spec("sextic-segment"))[0]
    bez = fit_piece(seg, 80).bezier
    assert bez.weights == (F(1), F(5, 11), F(16, 31), F(1))
    return bez


@pytest.fixture(scope="module")
def loop_result():
    return certify(load_spec("loop"), 0.05, m=120)


@pytest.fixture(scope="module")
def loop_items(loop_result):
    return [(nd.bez, nd.tet) for nd in loop_result.topology_certificate.pieces]


class TestInteriorsDisjoint:
    def test_far_apart(self):
        other = tet((5, 0, 0), (6, 0, 0), (5, 1, 0), (5, 0, 1))
        assert interiors_disjoint(UNIT, other)
        assert interiors_disjoint(other, UNIT)

    def test_overlapping(self):
        shift = F(1, 10)
        other = Tetrahedron(*(tuple(c + shift for c in v) for v in UNIT.vertices))
        assert not interiors_disjoint(UNIT, other)
        assert not interiors_disjoint(other, UNIT)

    def test_nested(self):
        c = (F(1, 4), F(1, 4), F(1, 4))
        inner = Tetrahedron(*(
            tuple(cc + (vc - cc) / 4 for vc, cc in zip(v, c))
            for v in UNIT.vertices))
        assert not interiors_disjoint(UNIT, inner)
        assert not interiors_disjoint(inner, UNIT)

    def test_shared_vertex_passes(self):
        # mirror image through the origin touches at one point only
        mirror = Tetrahedron(*(tuple(-c for c in v) for v in UNIT.vertices))
        assert interiors_disjoint(UNIT, mirror)

    def test_shared_face_passes(self):
        other = tet((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))
        assert interiors_disjoint(UNIT, other)

    def test_shared_edge_passes(self):
        # both contain the edge (0,0,0)-(1,0,0); parallel-edge axes kick in
        other = tet((0, 0, 0), (1, 0, 0), (0, -1, 0), (0, 0, -1))
        assert interiors_disjoint(UNIT, other)


def poke(items, idx, tgt):
    """Drag one control vertex of piece idx onto the centroid of piece tgt."""
    vs = items[tgt][1].vertices
    c = tuple(sum(v[i] for v in vs) / 4 for i in range(3))
    old = items[idx][1]
    bad = Tetrahedron(old.r0, c, old.r2, old.r3)
    out = list(items)
    out[idx] = (out[idx][0], bad)
    return out


class TestCheckTopology:
    def test_clean_chain_certifies(self, loop_items):
        rep = check_topology(loop_items)
        n = len(loop_items)
        assert rep.certified
        assert rep.rounds == 0
        assert rep.colliding == () and rep.requests == ()
        assert rep.checked_pairs == n * (n - 1) // 2
        assert [nd.pid for nd in rep.pieces] == list(range(n))

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            check_topology([])

    def test_broken_chain_rejected(self):
        far = tet((9, 9, 9), (10, 9, 9), (9, 10, 9), (9, 9, 10))
        items = [(RationalCubicBezier(*UNIT.vertices, F(1), F(1)), UNIT),
                 (RationalCubicBezier(*far.vertices, F(1), F(1)), far)]
        with pytest.raises(DomainError):
            check_topology(items)

    def test_overlap_reported_without_refine(self, loop_items):
        items = poke(loop_items, 4, 7)
        rep = check_topology(items)
        assert not rep.certified
        assert rep.colliding == ((4, 7),)
        assert rep.requests == (4, 7)
        assert rep.rounds == 0

    def test_refinement_resolves_poked_overlap(self, loop_items):
        items = poke(loop_items, 4, 7)

        def refine(bez, _tet, _payload):
            # honest split: children carry their true control tetrahedra
            out = []
            for child in bez.split(F(1, 2)):
                out.append((child, Tetrahedron(*child.points), None))
            return tuple(out)

        rep = check_topology(items, refine=refine)
        assert rep.certified
        assert rep.rounds == 1
        assert len(rep.pieces) == len(items) + 2
        kids = {nd.pid: nd for nd in rep.pieces if nd.parent is not None}
        assert {nd.parent for nd in kids.values()} == {4, 7}
        for nd in kids.values():
            assert nd.root == nd.parent
        # split pieces replaced in order
        assert [nd.pid for nd in rep.pieces] == [0, 1, 2, 3, 8, 9, 5, 6, 10, 11]

    def test_budget_exhaustion_raises(self):
        a = UNIT
        b = tet((0, 0, 1), ("1/8", "1/8", "1/8"), (1, 0, 1), (1, 1, 2))
        items = [(RationalCubicBezier(*a.vertices, F(1), F(1)), a),
                 (RationalCubicBezier(*b.vertices, F(1), F(1)), b)]
        rep = check_topology(items)
        assert not rep.certified and rep.requests == (0, 1)

        def stubborn(bez, tet_, payload):
            return ((bez, tet_, payload), (bez, tet_, payload))

        with pytest.raises(TopologyUnresolvedError):
            check_topology(items, refine=stubborn, budget=3)


class TestToBspline:
    def test_single_piece(self, twisted_bez):
        sp = to_bspline([twisted_bez])
        assert len(sp.control_points) == 4
        assert len(sp.knots) == 8
        lo, hi = sp.span
        assert sp.knots == (lo,) * 4 + (hi,) * 4
        assert sp.control_points == twisted_bez.points
        assert sp.weights == twisted_bez.weights
        assert sp.evaluate((lo + hi) / 2) == twisted_bez.eval(F(1, 2))

    def test_split_pieces_give_c1_joint(self, twisted_bez):
        left, right = twisted_bez.split(F(1, 2))
        sp = to_bspline([left, right])
        (j,) = sp.joints
        assert (j.requested, j.achieved, j.multiplicity) == ("C1", "C1", 2)
        assert len(sp.control_points) == 6
        assert len(sp.knots) == 10
        k1 = sp.breakpoints()[1]
        assert sp.evaluate(k1) == twisted_bez.eval(F(1, 2))
        assert sp.evaluate(sp.span[1]) == twisted_bez.eval(F(1))
        # piece 0 keeps its parameter up to the affine knot map
        assert sp.evaluate(k1 / 3) == twisted_bez.eval(F(1, 6))

    def test_split_spline_stays_on_curve(self, twisted_bez):
        left, right = twisted_bez.split(F(1, 2))
        sp = to_bspline([left, right])
        ts = np.linspace(float(sp.span[0]), float(sp.span[1]), 400)
        p = sp.evaluate_float(ts)
        # the image lies on the twisted cubic y = x^2, z = x^3
        assert np.abs(p[:, 1] - p[:, 0] ** 2).max() < 1e-12
        assert np.abs(p[:, 2] - p[:, 0] ** 3).max() < 1e-12

    def test_weighted_split_rescales_to_c1(self, sextic_bez):
        left, right = sextic_bez.split(F(1, 2))
        assert left.weights[3] != F(1)  # Moebius factor genuinely needed
        sp = to_bspline([left, right])
        (j,) = sp.joints
        assert (j.achieved, j.multiplicity) == ("C1", 2)
        assert sp.evaluate(sp.breakpoints()[1]) == sextic_bez.eval(F(1, 2))

    def test_forced_c0_joint(self, sextic_bez):
        left, right = sextic_bez.split(F(1, 2))
        sp = to_bspline([left, right], ["C0"])
        (j,) = sp.joints
        assert (j.requested, j.achieved, j.multiplicity) == ("C0", "C0", 3)
        assert len(sp.control_points) == 7
        assert len(sp.knots) == 11
        assert sp.evaluate(sp.breakpoints()[1]) == sextic_bez.eval(F(1, 2))

    def test_endpoint_mismatch_rejected(self, twisted_bez, sextic_bez):
        with pytest.raises(CertiCurveError):
            to_bspline([twisted_bez, sextic_bez])

    def test_bad_joint_tags_rejected(self, twisted_bez):
        left, right = twisted_bez.split(F(1, 2))
        with pytest.raises(DomainError):
            to_bspline([left, right], ["C0", "C0"])
        with pytest.raises(DomainError):
            to_bspline([left, right], ["G2"])

    def test_no_pieces_rejected(self):
        with pytest.raises(DomainError):
            to_bspline([])


@pytest.fixture(scope="module")
def simple(twisted_bez):
    return to_bspline([twisted_bez])


class TestBSplineCurve:
    def test_invalid_inputs_rejected(self, simple):
        pts, ws, ks = simple.control_points, simple.weights, simple.knots
        with pytest.raises(DomainError):
            BSplineCurve(pts, (F(1), F(-1), F(1), F(1)), ks)
        with pytest.raises(DomainError):
            BSplineCurve(pts, ws, ks[:-1])
        with pytest.raises(DomainError):
            BSplineCurve(pts, ws, tuple(reversed(ks)))
        lo, hi = simple.span
        with pytest.raises(DomainError):
            BSplineCurve(pts, ws, (lo, lo, lo, hi, hi, hi, hi, hi + 1))
        with pytest.raises(DomainError):
            BSplineCurve(pts, ws, ks, degree=2)

    def test_breakpoints_and_span(self, loop_result):
        sp = loop_result.spline
        assert len(sp.breakpoints()) == len(loop_result.pieces) + 1
        assert sp.span == (sp.knots[3], sp.knots[-4])
        assert sp.breakpoints()[0] == sp.span[0]
        assert sp.breakpoints()[-1] == sp.span[1]

    def test_exact_and_float_evaluation_agree(self, loop_result):
        sp = loop_result.spline
        lo, hi = sp.span
        params = [lo + (hi - lo) * F(k, 24) for k in range(25)]
        got = sp.evaluate_float(np.array([float(t) for t in params]))
        want = np.array([[float(c) for c in sp.evaluate(t)] for t in params])
        assert np.abs(got - want).max() < 1e-9


class TestCertify:
    def test_twisted_cubic_is_exact(self):
        res = certify(twisted_cubic(), 1e-6, m=80)
        assert len(res.pieces) == 1
        assert res.global_max_error <= 1e-12
        assert res.preserved_features == ()
        cert = res.topology_certificate
        assert cert.certified and cert.checked_pairs == 0
        sp = res.spline
        assert sp.weights == (F(1),) * 4
        assert tuple(sp.control_points) == cert.pieces[0].tet.vertices
        mid = (sp.span[0] + sp.span[1]) / 2
        assert sp.evaluate(mid) == (F(1, 2), F(1, 4), F(1, 8))

    def test_loop_certificate(self, loop_result):
        res = loop_result
        assert len(res.pieces) == 8
        assert res.global_max_error <= 0.05
        assert res.topology_certificate.certified
        assert all(j.achieved == "C1" and j.multiplicity == 2
                   for j in res.spline.joints)
        by_kind = {}
        for f in res.preserved_features:
            by_kind.setdefault(f.kind, set()).add(f.param)
        assert by_kind[VertexKind.SELF_INTERSECTION] == {F(-1), F(1)}
        assert by_kind[VertexKind.TORSION_VANISHING] == {
            F(0),
            F(4038891625495, 2877420137724), -F(4038891625495, 2877420137724),
            F(508220444033, 1050667160984), -F(508220444033, 1050667160984)}
        for f in res.preserved_features:
            assert f.status == "verified" and f.on_spline
            if f.kind is VertexKind.SELF_INTERSECTION:
                # the crossing point itself is hit exactly
                assert f.point == (F(0), F(0), F(0))
                assert res.spline.evaluate(f.spline_param) == f.point

    def test_keratoid_cusp_kept_c0(self):
        res = certify(load_spec("keratoid"), 0.01, m=120)
        assert res.global_max_error <= 0.01
        assert res.topology_certificate.certified
        mults = [(j.requested, j.multiplicity) for j in res.spline.joints]
        assert mults.count(("C0", 3)) == 1
        assert all(m == 2 for r, m in mults if r == "C1")
        feats = {f.kind: f for f in res.preserved_features}
        assert set(feats) == {VertexKind.SELF_INTERSECTION,
                              VertexKind.TORSION_VANISHING, VertexKind.CUSP}
        assert feats[VertexKind.SELF_INTERSECTION].param == F(0)
        assert feats[VertexKind.CUSP].param == F(1)
        assert feats[VertexKind.CUSP].point == (F(0), F(0), F(0))
        assert all(f.status == "verified" for f in res.preserved_features)
        # cusp joint is the one with the tripled knot
        cusp_break = feats[VertexKind.CUSP].spline_param
        idx = res.spline.breakpoints().index(cusp_break)
        assert res.spline.joints[idx - 1].multiplicity == 3

    def test_invalid_delta_rejected(self):
        with pytest.raises(DomainError):
            certify(twisted_cubic(), 0)
        with pytest.raises(DomainError):
            certify(twisted_cubic(), -0.1)

    def test_failures_carry_stage_tag(self):
        with pytest.raises(NonConvergentError, match="^approximation:"):
            certify(twisted_cubic(), 1e-30, m=50)
