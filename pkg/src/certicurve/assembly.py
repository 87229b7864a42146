"""Topology certification and B-spline assembly of the fitted pieces.

The isotopy certificate rests on pairwise disjointness of the control
tetrahedra: every non-adjacent pair must have no common interior point,
established here by an exact separating-plane search (face normals,
edge-pair cross directions, and auxiliary axes for parallel edges, all
in rational arithmetic).  Adjacent pieces sharing a smooth joint are
handled by the radial/same-side conditions instead; a cusp joint falls
back to the disjointness test.  Offending pairs are split at their
shoulder points and only descendants of offenders are rechecked.

Conversion to a single rational B-spline rescales each piece by a
Moebius factor so that interior knots of multiplicity two give true C1
joints in homogeneous space; where that is unreachable (or at cusps)
a multiplicity-three knot keeps C0 and the outcome is recorded per
joint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from fractions import Fraction as F
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline as _SciBSpline

from .approximate import Piece, approximate_segment, fit_piece, shoulder_point_segment, subsegment
from .bezier import RationalCubicBezier
from .characters import VertexKind, build_vertex_list
from .curves import RationalCurve
from .errors import CertiCurveError, DomainError, NonConvergentError, TopologyUnresolvedError
from .segmentation import QuasiCubicSegment, Tetrahedron, segment_curve

REFINEMENT_BUDGET = 16


def _sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def _dot(p, q):
    return sum(a * b for a, b in zip(p, q))


def _cross(p, q):
    return (p[1] * q[2] - p[2] * q[1],
            p[2] * q[0] - p[0] * q[2],
            p[0] * q[1] - p[1] * q[0])


_ZERO = (0, 0, 0)


def _parallel(u, v):
    return _cross(u, v) == _ZERO


def _reject(w, d):
    # component of w orthogonal to d, scaled by |d|^2 to stay rational
    dd = _dot(d, d)
    wd = _dot(w, d)
    return tuple(wi * dd - di * wd for wi, di in zip(w, d))


# ---------------------------------------------------------------------------
# exact tetrahedron disjointness


_FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def _candidate_axes(va, vb):
    axes = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    for v in (va, vb):
        for i, j, k in _FACES:
            n = _cross(_sub(v[j], v[i]), _sub(v[k], v[i]))
            if n != _ZERO:
                axes.append(n)
    ea = [(va[i], _sub(va[j], va[i])) for i, j in combinations(range(4), 2)]
    eb = [(vb[i], _sub(vb[j], vb[i])) for i, j in combinations(range(4), 2)]
    for pa, da in ea:
        for pb, db in eb:
            ax = _cross(da, db)
            if ax != _ZERO:
                axes.append(ax)
            else:
                # parallel edges: separate within the plane they span
                aux = _reject(_sub(pb, pa), da)
                if aux != _ZERO:
                    axes.append(aux)
    return axes


def interiors_disjoint(ta: Tetrahedron, tb: Tetrahedron) -> bool:
    """Exact separating-plane test; touching boundaries still count as
    disjoint interiors, so pieces meeting at a point pass."""
    va, vb = ta.vertices, tb.vertices
    for ax in _candidate_axes(va, vb):
        a = [_dot(ax, v) for v in va]
        b = [_dot(ax, v) for v in vb]
        if max(a) <= min(b) or max(b) <= min(a):
            return True
    return False


# ---------------------------------------------------------------------------
# topology checking with shoulder refinement


def _frames_match(ta: Tetrahedron, tb: Tetrahedron) -> bool:
    # shared endpoint with the same tangent ray and osculating plane
    p = ta.vertices[3]
    if p != tb.vertices[0]:
        return False
    dl = _sub(p, ta.vertices[2])
    dr = _sub(tb.vertices[1], p)
    if not (_parallel(dl, dr) and _dot(dl, dr) > 0):
        return False
    nl = _cross(_sub(ta.vertices[2], ta.vertices[1]), _sub(ta.vertices[3], ta.vertices[1]))
    nr = _cross(_sub(tb.vertices[1], tb.vertices[0]), _sub(tb.vertices[2], tb.vertices[0]))
    return _parallel(nl, nr)


def _first_case_ok(ta: Tetrahedron, tb: Tetrahedron) -> bool:
    """Smooth shared joint: the second piece's tangent vertex continues
    the radial through the joint, and both osculating-plane vertices
    bend to the same side of the tangent."""
    p = ta.vertices[3]
    dl = _sub(p, ta.vertices[2])
    dr = _sub(tb.vertices[1], p)
    if not (_parallel(dl, dr) and _dot(dl, dr) > 0):
        return False
    m1 = _reject(_sub(ta.vertices[1], p), dl)
    m2 = _reject(_sub(tb.vertices[2], p), dl)
    return _dot(m1, m2) > 0


@dataclass(frozen=True)
class PieceNode:
    """One piece in the topology check, with its refinement lineage."""

    pid: int
    root: int
    bez: RationalCubicBezier
    tet: Tetrahedron
    payload: object
    parent: int | None


@dataclass(frozen=True)
class TopologyReport:
    certified: bool
    rounds: int
    checked_pairs: int
    colliding: tuple
    requests: tuple
    pieces: tuple  # final PieceNode list in parameter order


def check_topology(pieces: Sequence, *, refine: Callable | None = None,
                   budget: int = REFINEMENT_BUDGET) -> TopologyReport:
    """Pairwise tetrahedron check over the ordered pieces.

    Non-adjacent pairs must have exactly disjoint interiors; adjacent
    pairs with matching frames go through the smooth-joint conditions
    and otherwise through the disjointness test.  With a ``refine``
    callback, offenders are split (both members of each colliding pair)
    and only descendant pairs are rechecked, up to ``budget`` rounds.
    Without a callback the report simply lists the refinement requests.
    """
    entries = []
    for item in pieces:
        if len(item) == 2:
            bez, tet = item
            payload = None
        else:
            bez, tet, payload = item
        entries.append((bez, tet, payload))
    if not entries:
        raise DomainError("no pieces to check")

    nodes: dict[int, PieceNode] = {}
    order: list[int] = []
    for i, (bez, tet, payload) in enumerate(entries):
        nodes[i] = PieceNode(i, i, bez, tet, payload, None)
        order.append(i)
    for a, b in zip(order, order[1:]):
        if nodes[a].tet.vertices[3] != nodes[b].tet.vertices[0]:
            raise DomainError("pieces must chain endpoint-to-endpoint in parameter order")

    checked = 0

    def pair_ok(a: int, b: int, adjacent: bool) -> bool:
        nonlocal checked
        checked += 1
        ta, tb = nodes[a].tet, nodes[b].tet
        if adjacent and _frames_match(ta, tb):
            return _first_case_ok(ta, tb) or interiors_disjoint(ta, tb)
        return interiors_disjoint(ta, tb)

    colliding = []
    for x in range(len(order)):
        for y in range(x + 1, len(order)):
            if not pair_ok(order[x], order[y], y == x + 1):
                colliding.append((order[x], order[y]))

    rounds = 0
    next_pid = len(order)
    while colliding and refine is not None and rounds < budget:
        rounds += 1
        offenders = sorted({p for pr in colliding for p in pr})
        children: dict[int, tuple[int, int]] = {}
        for pid in offenders:
            node = nodes[pid]
            (bl, tl, pl), (br, tr, pr_) = refine(node.bez, node.tet, node.payload)
            lid, rid = next_pid, next_pid + 1
            next_pid += 2
            nodes[lid] = PieceNode(lid, node.root, bl, tl, pl, pid)
            nodes[rid] = PieceNode(rid, node.root, br, tr, pr_, pid)
            children[pid] = (lid, rid)
        order = [cid for pid in order for cid in children.get(pid, (pid,))]
        pos = {pid: k for k, pid in enumerate(order)}

        def desc(pid):
            return children.get(pid, (pid,))

        seen = set()
        fresh = []

        def recheck(u, v):
            if pos[u] > pos[v]:
                u, v = v, u
            if (u, v) in seen:
                return
            seen.add((u, v))
            if not pair_ok(u, v, pos[v] == pos[u] + 1):
                fresh.append((u, v))

        for a, b in colliding:
            for x in desc(a):
                for y in desc(b):
                    recheck(x, y)
        # fresh joints: between siblings and against the outer neighbors
        for pid, (lid, rid) in children.items():
            recheck(lid, rid)
            for cid, step in ((lid, -1), (rid, 1)):
                k = pos[cid] + step
                if 0 <= k < len(order):
                    recheck(cid, order[k])
        colliding = fresh

    if colliding and refine is not None:
        raise TopologyUnresolvedError(
            f"{len(colliding)} tetrahedron pairs still overlap after {rounds} refinement rounds")
    requests = tuple(sorted({p for pr in colliding for p in pr}))
    return TopologyReport(
        certified=not colliding, rounds=rounds, checked_pairs=checked,
        colliding=tuple(colliding), requests=requests,
        pieces=tuple(nodes[pid] for pid in order))


# ---------------------------------------------------------------------------
# B-spline conversion


@dataclass(frozen=True)
class JointInfo:
    """Continuity outcome at the joint after piece ``index``."""

    index: int
    requested: str
    achieved: str
    multiplicity: int


@dataclass(frozen=True)
class BSplineCurve:
    """Clamped cubic rational B-spline over exact rational data."""

    control_points: tuple
    weights: tuple
    knots: tuple
    degree: int = 3
    joints: tuple = ()

    def __post_init__(self):
        if self.degree != 3:
            raise DomainError("only cubic B-splines are supported")
        n = len(self.control_points)
        if len(self.weights) != n:
            raise DomainError("one weight per control point required")
        if len(self.knots) != n + 4:
            raise DomainError("knot count must be control count + 4")
        if any(w <= 0 for w in self.weights):
            raise DomainError("weights must be positive")
        k = self.knots
        if any(a > b for a, b in zip(k, k[1:])):
            raise DomainError("knots must be nondecreasing")
        if not (k[0] == k[3] and k[-4] == k[-1]):
            raise DomainError("knot vector must be clamped")
        for v in set(k[4:-4]):
            if k.count(v) > 3:
                raise DomainError("interior knot multiplicity above 3")

    @property
    def span(self) -> tuple[Fraction, Fraction]:
        return self.knots[3], self.knots[-4]

    def breakpoints(self) -> list[Fraction]:
        out = []
        for v in self.knots[3:-3]:
            if not out or v != out[-1]:
                out.append(v)
        return out

    def _hrow(self, i):
        w = self.weights[i]
        p = self.control_points[i]
        return (w * p[0], w * p[1], w * p[2], w)

    def evaluate(self, t) -> tuple:
        """Exact de Boor on the homogeneous control rows."""
        t = F(t)
        lo, hi = self.span
        if not lo <= t <= hi:
            raise DomainError(f"parameter {t} outside [{lo}, {hi}]")
        knots = self.knots
        j = None
        for i in range(3, len(knots) - 4):
            if knots[i] <= t < knots[i + 1]:
                j = i
                break
        if j is None:
            j = max(i for i in range(3, len(knots) - 4) if knots[i] < knots[i + 1])
        d = [self._hrow(j - 3 + i) for i in range(4)]
        for r in range(1, 4):
            for i in range(3, r - 1, -1):
                gi = j - 3 + i
                den = knots[gi + 4 - r] - knots[gi]
                a = (t - knots[gi]) / den if den != 0 else F(0)
                d[i] = tuple((1 - a) * u + a * v for u, v in zip(d[i - 1], d[i]))
        x, y, z, w = d[3]
        return (x / w, y / w, z / w)

    def evaluate_float(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        lo, hi = (float(v) for v in self.span)
        ts = np.clip(ts, lo, hi)
        knots = np.array([float(v) for v in self.knots])
        rows = np.array([[float(c) for c in self._hrow(i)]
                         for i in range(len(self.control_points))])
        vals = _SciBSpline(knots, rows, 3)(ts)
        return vals[:, :3] / vals[:, 3:4]


def _chord(bez: RationalCubicBezier) -> Fraction:
    d = _sub(bez.points[3], bez.points[0])
    c = F(math.sqrt(float(_dot(d, d)))).limit_denominator(10**9)
    return c if c > 0 else F(1)


def _direction_ratio(d, e):
    # e = rho * d for exactly parallel vectors; rho from the largest component
    k = max(range(3), key=lambda i: abs(d[i]))
    return F(e[k]) / F(d[k])


def to_bspline(pieces: Sequence[RationalCubicBezier], joints=None) -> BSplineCurve:
    """Stitch the Bezier pieces into one clamped cubic B-spline.

    Each joint tagged C1 is attempted with an interior knot of
    multiplicity two: the right piece is Moebius-rescaled so the
    homogeneous control legs line up, which fixes its knot span.  When
    the rescaling has no positive solution, or the tag is C0, the knot
    gets multiplicity three and spacing restarts from the chord length.
    """
    pieces = list(pieces)
    n = len(pieces)
    if n == 0:
        raise DomainError("no pieces to convert")
    for a, b in zip(pieces, pieces[1:]):
        if a.points[3] != b.points[0]:
            raise CertiCurveError("adjacent pieces do not share their endpoint exactly")
    if joints is None:
        tags = ("C1",) * (n - 1)
    else:
        tags = tuple(str(t).upper() for t in joints)
        if len(tags) != n - 1 or any(t not in ("C0", "C1") for t in tags):
            raise DomainError("joint tags must be C0/C1, one per interior joint")

    lam, scale = F(1), F(1)
    h = _chord(pieces[0])
    rows_all, spans, infos = [], [], []
    for i, bez in enumerate(pieces):
        w = bez.weights
        rows = [tuple(scale * lam**j * w[j] * c for c in (*bez.points[j], 1))
                for j in range(4)]
        rows_all.append(rows)
        spans.append(h)
        if i == n - 1:
            break
        nxt = pieces[i + 1]
        w0n, w1n = nxt.weights[0], nxt.weights[1]
        achieved, mult = "C0", 3
        lam_next = F(1)
        h_next = _chord(nxt)
        if tags[i] == "C1":
            p = bez.points[3]
            d = _sub(p, bez.points[2])
            e = _sub(nxt.points[1], p)
            if _parallel(d, e) and _dot(d, e) > 0:
                rho = _direction_ratio(d, e)
                kval = rho * (lam * w[3] - w[2]) / w[2]
                if kval < 1:
                    lam_next = w0n / (w1n * (1 - kval))
                    h_next = lam * lam_next * rho * h * w[3] * w1n / (w[2] * w0n)
                    achieved, mult = "C1", 2
        infos.append(JointInfo(i, tags[i], achieved, mult))
        scale = scale * lam**3 * w[3] / w0n
        lam, h = lam_next, h_next

    knot_vals = [F(0)]
    for h in spans:
        knot_vals.append(knot_vals[-1] + h)

    ctrl = list(rows_all[0][:3])
    knots = [knot_vals[0]] * 4
    for i, info in enumerate(infos):
        knots.extend([knot_vals[i + 1]] * info.multiplicity)
        if info.multiplicity == 3:
            ctrl.append(rows_all[i][3])
        ctrl.append(rows_all[i + 1][1])
        ctrl.append(rows_all[i + 1][2])
    ctrl.append(rows_all[-1][3])
    knots.extend([knot_vals[-1]] * 4)

    weights = tuple(row[3] for row in ctrl)
    points = tuple((row[0] / row[3], row[1] / row[3], row[2] / row[3]) for row in ctrl)
    spline = BSplineCurve(points, weights, tuple(knots), 3, tuple(infos))

    _verify_pointwise(spline, rows_all, knot_vals)
    return spline


def _verify_pointwise(spline: BSplineCurve, rows_all, knot_vals, samples: int = 100):
    # the spline must reproduce every (rescaled) piece to float precision
    us = np.linspace(0.0, 1.0, samples)
    for i, rows in enumerate(rows_all):
        t0, t1 = float(knot_vals[i]), float(knot_vals[i + 1])
        got = spline.evaluate_float(t0 + us * (t1 - t0))
        h = np.array([[float(c) for c in row] for row in rows])
        u = us[:, None]
        basis = np.concatenate([(1 - u)**3, 3 * u * (1 - u)**2, 3 * u**2 * (1 - u), u**3], axis=1)
        vals = basis @ h
        want = vals[:, :3] / vals[:, 3:4]
        tol = 1e-12 * (1.0 + np.abs(want).max())
        err = np.abs(got - want).max()
        if err > tol:
            raise CertiCurveError(
                f"B-spline deviates from piece {i} by {err:.3e} (tol {tol:.3e})")


# ---------------------------------------------------------------------------
# end-to-end certification


@dataclass(frozen=True)
class FeatureRecord:
    """One preserved character parameter with its verification outcome."""

    kind: VertexKind
    param: Fraction
    spline_param: Fraction
    point: tuple
    on_spline: bool
    tangent_cross: float
    status: str


@dataclass(frozen=True)
class CertifiedResult:
    spline: BSplineCurve
    pieces: tuple  # of Piece, in parameter order
    preserved_features: tuple
    global_max_error: float
    topology_certificate: TopologyReport


@dataclass(frozen=True)
class _Payload:
    piece: Piece
    seg: QuasiCubicSegment


def _stage(name: str, fn):
    try:
        return fn()
    except CertiCurveError as exc:
        if str(exc).startswith(f"{name}:"):
            raise
        raise type(exc)(f"{name}: {exc}") from exc


def _unit(v):
    a = np.array([float(c) for c in v])
    n = np.linalg.norm(a)
    return a / n if n > 0 else a


def _leg_cross(leg, tangent) -> float:
    return float(np.linalg.norm(np.cross(_unit(leg), _unit(tangent))))


def certify(curve: RationalCurve, delta, *, strategy: str = "shoulder",
            m: int = 300, budget: int = REFINEMENT_BUDGET,
            root_width=None) -> CertifiedResult:
    """Full pipeline: segmentation, per-segment approximation, topology
    certification with shoulder refinement, and B-spline conversion."""
    if float(delta) <= 0:
        raise DomainError("error bound must be positive")

    vlist = _stage("characters", lambda: build_vertex_list(curve, root_width))
    segments = _stage("segmentation", lambda: segment_curve(curve, vlist))

    items = []
    for seg in segments:
        run = _stage("approximation",
                     lambda s=seg: approximate_segment(s, delta, strategy, m=m))
        for piece in run.pieces:
            pseg = subsegment(seg, piece.t0, piece.t1)
            items.append((piece.bezier, pseg.tet, _Payload(piece, pseg)))

    def refine(bez, tet, payload):
        seg = payload.seg
        tsplit = shoulder_point_segment(seg).param
        out = []
        for a, b in ((seg.t0, tsplit), (tsplit, seg.t1)):
            child = subsegment(seg, a, b)
            piece = fit_piece(child, m)
            out.append((piece.bezier, child.tet, _Payload(piece, child)))
        return tuple(out)

    report = _stage("topology",
                    lambda: check_topology(items, refine=refine, budget=budget))
    final = [node.payload.piece for node in report.pieces]

    worst = max(p.report.max_error for p in final)
    if not worst <= float(delta):
        raise NonConvergentError(
            f"approximation: refinement left error {worst} above {delta}")

    cusp_params = {p.value for p in vlist.all_params if VertexKind.CUSP in p.kinds}
    tags = ["C0" if p.t1 in cusp_params else "C1" for p in final[:-1]]
    spline = _stage("conversion",
                    lambda: to_bspline([p.bezier for p in final], tags))

    boundaries = [final[0].t0] + [p.t1 for p in final]
    breaks = spline.breakpoints()
    features = []
    for ref in vlist.all_params:
        kind = max(ref.kinds, default=VertexKind.PLAIN_SEGMENTING)
        if kind <= VertexKind.ENDPOINT:
            continue
        tval = ref.value
        if tval not in boundaries:
            raise CertiCurveError(
                f"conversion: character parameter {tval} is not a piece boundary")
        k = boundaries.index(tval)
        u = breaks[k]
        vert = vlist.vertices[ref.vertex]
        pt = vert.point
        on_spline = spline.evaluate(u) == pt
        frame = vert.frames[ref.slot]
        cross = 0.0
        if k > 0:
            left = final[k - 1].bezier
            leg = _sub(left.points[3], left.points[2])
            cross = max(cross, _leg_cross(leg, frame.tangent_exact_minus))
        if k < len(final):
            right = final[k].bezier
            leg = _sub(right.points[1], right.points[0])
            cross = max(cross, _leg_cross(leg, frame.tangent_exact_plus))
        ok = on_spline and cross <= 1e-10
        features.append(FeatureRecord(
            kind=kind, param=tval, spline_param=u, point=pt,
            on_spline=on_spline, tangent_cross=cross,
            status="verified" if ok else "violated"))

    return CertifiedResult(
        spline=spline, pieces=tuple(final), preserved_features=tuple(features),
        global_max_error=worst, topology_certificate=report)
