"""Curve specification files and result bundles.

A curve spec is a JSON document with components ``x``/``y``/``z``, each
``{"num": [...], "den": [...]}`` in ascending coefficient order, an
``interval`` pair, and an optional ``name``.  Coefficients are integers
or exact-rational strings like ``"5/11"``; floats are rejected so the
input stays exact.  Bundles are versioned JSON documents; rationals are
emitted as canonical ``p/q`` strings and floats with 17 significant
digits.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import sympy as sp

from .bezier import RationalCubicBezier
from .characters import VertexKind, VertexList
from .curves import RationalCurve
from .errors import (
    CertiCurveError,
    DomainError,
    ImproperCurveError,
    PlanarCurveError,
)
from .polyops import as_fraction, as_rational, coeffs_of, poly_from_coeffs

SCHEMA = "certicurve/1"

QUADRIC_MONOMIALS = ("1", "x", "y", "z", "x^2", "x*y", "x*z", "y^2", "y*z", "z^2")
_POWERS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0),
           (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))
_XYZ = sp.symbols("x y z")

_CHARACTER_KINDS = frozenset({VertexKind.TORSION_VANISHING, VertexKind.INFLECTION,
                              VertexKind.SELF_INTERSECTION, VertexKind.CUSP})


class SpecFormatError(DomainError):
    """Malformed specification file; the message names the offending field."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


# ---------------------------------------------------------------------------
# parsing


def _rational(value, where: str) -> F:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise SpecFormatError(
            f"field {where}: expected an integer or rational string, "
            f"got {type(value).__name__}", field=where)
    try:
        return F(value)
    except (ValueError, ZeroDivisionError):
        raise SpecFormatError(
            f"field {where}: {value!r} is not an exact rational", field=where) from None


def _coeff_list(comp, key: str, where: str) -> list[F]:
    if not isinstance(comp, dict) or key not in comp:
        raise SpecFormatError(f"field {where}: missing coefficient list", field=where)
    raw = comp[key]
    if not isinstance(raw, list) or not raw:
        raise SpecFormatError(f"field {where}: expected a non-empty list", field=where)
    return [_rational(c, f"{where}[{i}]") for i, c in enumerate(raw)]


def read_spec_doc(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecFormatError(f"cannot read spec file {path}: {exc.strerror or exc}",
                              field="file") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            field="json") from None
    if not isinstance(doc, dict):
        raise SpecFormatError("spec document must be a JSON object", field="json")
    return doc


def _interval(doc) -> tuple[F, F]:
    iv = doc.get("interval")
    if not isinstance(iv, list) or len(iv) != 2:
        raise SpecFormatError("field interval: expected [lo, hi]", field="interval")
    lo = _rational(iv[0], "interval[0]")
    hi = _rational(iv[1], "interval[1]")
    if not lo < hi:
        raise SpecFormatError("field interval: lo must be below hi", field="interval")
    return lo, hi


def curve_from_doc(doc: dict) -> RationalCurve:
    extra = set(doc) - {"x", "y", "z", "interval", "name"}
    if extra:
        raise SpecFormatError(f"field {sorted(extra)[0]}: not part of a curve spec",
                              field=sorted(extra)[0])
    comps = []
    for ax in "xyz":
        if ax not in doc:
            raise SpecFormatError(f"field {ax}: missing component", field=ax)
        comps.append((_coeff_list(doc[ax], "num", f"{ax}.num"),
                      _coeff_list(doc[ax], "den", f"{ax}.den")))
    lo, hi = _interval(doc)
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise SpecFormatError("field name: expected a string", field="name")
    try:
        return RationalCurve.from_coeffs(*comps, (lo, hi), name=name)
    except (PlanarCurveError, ImproperCurveError):
        raise  # unsupported curve, not a spec formatting problem
    except CertiCurveError as exc:
        raise SpecFormatError(f"invalid curve: {exc}", field="components") from exc


def load_curve_spec(path) -> RationalCurve:
    return curve_from_doc(read_spec_doc(path))


# ---------------------------------------------------------------------------
# cubic Bezier specs


def _to_bernstein(coeffs) -> list[F]:
    # power basis on [0,1], degree at most three
    c = list(coeffs) + [F(0)] * (4 - len(coeffs))
    return [sum(F(math.comb(i, k), math.comb(3, k)) * c[k] for k in range(i + 1))
            for i in range(4)]


def bezier_from_doc(doc: dict) -> RationalCubicBezier:
    """A cubic Bezier either given directly or as a curve spec.

    The direct form is ``{"bezier": {"points": [[x,y,z] x4],
    "weights": [w x4]}}``.  A curve spec is converted exactly: common
    denominator, reparametrization of the interval onto [0,1], then the
    power-to-Bernstein change of basis; anything above degree three or
    with sign-changing weights is rejected.
    """
    if "bezier" in doc:
        bz = doc["bezier"]
        pts = bz.get("points") if isinstance(bz, dict) else None
        ws = bz.get("weights") if isinstance(bz, dict) else None
        if not isinstance(pts, list) or len(pts) != 4:
            raise SpecFormatError("field bezier.points: expected four control points",
                                  field="bezier.points")
        if not isinstance(ws, list) or len(ws) != 4:
            raise SpecFormatError("field bezier.weights: expected four weights",
                                  field="bezier.weights")
        points = []
        for i, p in enumerate(pts):
            if not isinstance(p, list) or len(p) != 3:
                raise SpecFormatError(f"field bezier.points[{i}]: expected [x, y, z]",
                                      field=f"bezier.points[{i}]")
            points.append(tuple(_rational(c, f"bezier.points[{i}][{j}]")
                                for j, c in enumerate(p)))
        weights = [_rational(w, f"bezier.weights[{i}]") for i, w in enumerate(ws)]
        try:
            return RationalCubicBezier(*points, weights[1], weights[2],
                                       w0=weights[0], w3=weights[3])
        except CertiCurveError as exc:
            raise SpecFormatError(f"invalid Bezier data: {exc}", field="bezier") from exc

    extra = set(doc) - {"x", "y", "z", "interval", "name"}
    if extra:
        raise SpecFormatError(f"field {sorted(extra)[0]}: not part of a Bezier spec",
                              field=sorted(extra)[0])
    comps = []
    for ax in "xyz":
        if ax not in doc:
            raise SpecFormatError(f"field {ax}: missing component", field=ax)
        comps.append((_coeff_list(doc[ax], "num", f"{ax}.num"),
                      _coeff_list(doc[ax], "den", f"{ax}.den")))
    lo, hi = _interval(doc)

    t, u = sp.symbols("t u")
    dens = [poly_from_coeffs(den, t) for _, den in comps]
    common = dens[0]
    for d in dens[1:]:
        common = sp.lcm(common, d)
    rows = []
    for (num, _), den in zip(comps, dens):
        factor, rem = sp.div(common, den, t)
        assert rem == 0
        rows.append(poly_from_coeffs(num, t) * factor)
    rows.append(common)

    homog = []
    for p in rows:
        q = sp.Poly(p.as_expr().subs(t, as_rational(lo) + as_rational(hi - lo) * u),
                    u, domain="QQ")
        if q.degree() > 3:
            raise SpecFormatError(
                "curve spec is not a cubic Bezier: component degree exceeds three",
                field="components")
        homog.append(_to_bernstein(coeffs_of(q)))

    wrow = homog[3]
    if all(w < 0 for w in wrow):
        homog = [[-v for v in row] for row in homog]
        wrow = homog[3]
    if any(w <= 0 for w in wrow):
        raise SpecFormatError(
            "curve spec is not a positive-weight cubic Bezier", field="components")
    points = [tuple(homog[c][i] / wrow[i] for c in range(3)) for i in range(4)]
    try:
        return RationalCubicBezier(*points, wrow[1], wrow[2], w0=wrow[0], w3=wrow[3])
    except CertiCurveError as exc:
        raise SpecFormatError(f"invalid Bezier data: {exc}", field="components") from exc


def load_bezier_spec(path) -> RationalCubicBezier:
    return bezier_from_doc(read_spec_doc(path))


# ---------------------------------------------------------------------------
# quadric serialization


def quadric_coefficients(q: sp.Poly) -> list[str]:
    """Ten coefficients in the QUADRIC_MONOMIALS order, as rationals."""
    table = {monom: as_fraction(c) for monom, c in q.as_dict().items()}
    return [_rat(table.get(powers, F(0))) for powers in _POWERS]


def quadric_from_coefficients(coeffs, where: str = "quadrics") -> sp.Poly:
    if not isinstance(coeffs, list) or len(coeffs) != len(_POWERS):
        raise SpecFormatError(f"field {where}: expected {len(_POWERS)} coefficients",
                              field=where)
    x, y, z = _XYZ
    expr = sp.Integer(0)
    for i, (raw, (a, b, c)) in enumerate(zip(coeffs, _POWERS)):
        expr += as_rational(_rational(raw, f"{where}[{i}]")) * x**a * y**b * z**c
    return sp.Poly(expr, x, y, z, domain="QQ")


def vanishing_residues(bez: RationalCubicBezier, quadrics) -> list[sp.Expr]:
    """Symbolic composition of each quadric with the Bezier.

    Returns one expression per quadric; all must be identically zero for
    the quadrics to contain the curve.
    """
    t = sp.Symbol("t")
    basis = [sp.binomial(3, i) * t**i * (1 - t) ** (3 - i) for i in range(4)]
    w = sum(basis[i] * as_rational(bez.weights[i]) for i in range(4))
    xyz = [sum(basis[i] * as_rational(bez.weights[i] * bez.points[i][c])
               for i in range(4)) for c in range(3)]
    out = []
    for q in quadrics:
        total = sp.Integer(0)
        for (a, b, c), coeff in sp.Poly(q, *_XYZ).as_dict().items():
            total += (coeff * xyz[0] ** a * xyz[1] ** b * xyz[2] ** c
                      * w ** (2 - a - b - c))
        out.append(sp.expand(total))
    return out


# ---------------------------------------------------------------------------
# bundles


def _rat(v) -> str:
    return str(F(v))


def _rat3(p) -> list[str]:
    return [_rat(c) for c in p]


def _f(v) -> float:
    return float(v)


def _kindname(kind: VertexKind) -> str:
    return kind.name.lower().replace("_", "-")


def _frame_doc(frame) -> dict:
    return {
        "tangent_minus": [_f(c) for c in frame.alpha_minus],
        "tangent_plus": [_f(c) for c in frame.alpha_plus],
        "binormal_minus": [_f(c) for c in frame.gamma_minus],
        "binormal_plus": [_f(c) for c in frame.gamma_plus],
        "tangent_exact_minus": _rat3(frame.tangent_exact_minus),
        "tangent_exact_plus": _rat3(frame.tangent_exact_plus),
    }


def analyze_bundle(curve: RationalCurve, vlist: VertexList) -> dict:
    characters = []
    for ref in vlist.all_params:
        kinds = sorted(k for k in ref.kinds if k in _CHARACTER_KINDS)
        if not kinds:
            continue
        vert = vlist.vertices[ref.vertex]
        characters.append({
            "param": _rat(ref.value),
            "point": _rat3(vert.point),
            "kinds": [_kindname(k) for k in kinds],
            "frame": _frame_doc(vert.frames[ref.slot]),
        })
    return {
        "schema": SCHEMA,
        "kind": "analysis",
        "name": curve.name,
        "interval": [_rat(vlist.domain[0]), _rat(vlist.domain[1])],
        "characters": characters,
        "segmenting_params": [_rat(p.value) for p in vlist.all_params],
    }


def result_bundle(curve: RationalCurve, result, delta, strategy: str, m: int,
                  nsamples: int = 33) -> dict:
    segments = []
    for piece in result.pieces:
        q = quadric_coefficients
        segments.append({
            "t0": _rat(piece.t0),
            "t1": _rat(piece.t1),
            "tetrahedron": [_rat3(p) for p in piece.bezier.points],
            "weights": [_rat(w) for w in piece.bezier.weights],
            "max_error": _f(piece.report.max_error),
            "argmax_t": _f(piece.report.argmax_t),
            "quadrics": {"f": q(piece.ideal.f), "g": q(piece.ideal.g),
                         "h": q(piece.ideal.h)},
        })

    sp_ = result.spline
    lo, hi = sp_.span
    n = max(2, int(nsamples))
    ts = np.linspace(float(lo), float(hi), n)
    pts = sp_.evaluate_float(ts)
    worst = max(result.pieces, key=lambda p: p.report.max_error)

    cert = result.topology_certificate
    return {
        "schema": SCHEMA,
        "kind": "approximation",
        "name": curve.name,
        "interval": [_rat(curve.domain[0]), _rat(curve.domain[1])],
        "delta": _f(delta),
        "strategy": strategy,
        "samples_per_piece": int(m),
        "quadric_monomials": list(QUADRIC_MONOMIALS),
        "segments": segments,
        "spline": {
            "degree": sp_.degree,
            "knots": [_rat(k) for k in sp_.knots],
            "control_points": [_rat3(p) for p in sp_.control_points],
            "weights": [_rat(w) for w in sp_.weights],
            "joints": [{"index": j.index, "requested": j.requested,
                        "achieved": j.achieved, "multiplicity": j.multiplicity}
                       for j in sp_.joints],
        },
        "features": [{
            "kind": _kindname(f.kind),
            "param": _rat(f.param),
            "spline_param": _rat(f.spline_param),
            "point": _rat3(f.point),
            "on_spline": f.on_spline,
            "tangent_cross": _f(f.tangent_cross),
            "status": f.status,
        } for f in result.preserved_features],
        "topology": {
            "certified": cert.certified,
            "rounds": cert.rounds,
            "checked_pairs": cert.checked_pairs,
        },
        "error": {
            "max": _f(result.global_max_error),
            "bound": _f(delta),
            "argmax_t": _f(worst.report.argmax_t),
        },
        "spline_samples": [{"t": _f(t), "point": [_f(c) for c in p]}
                           for t, p in zip(ts, pts)],
    }


def implicitize_bundle(bez: RationalCubicBezier, ideal) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "implicitization",
        "quadric_monomials": list(QUADRIC_MONOMIALS),
        "control_points": [_rat3(p) for p in bez.points],
        "weights": [_rat(w) for w in bez.weights],
        "quadrics": {
            "f": quadric_coefficients(ideal.f),
            "g": quadric_coefficients(ideal.g),
            "h": quadric_coefficients(ideal.h),
        },
        "verified": True,
    }


# ---------------------------------------------------------------------------
# output formatting


def dumps(doc: dict) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    floats: list[str] = []

    def swap(o):
        if isinstance(o, bool) or o is None:
            return o
        if isinstance(o, float):
            floats.append(format(o, ".17g"))
            return f"\x00{len(floats) - 1}\x00"
        if isinstance(o, str):
            if "\x00" in o:
                raise DomainError("strings in bundles must not contain NUL")
            return o
        if isinstance(o, dict):
            return {k: swap(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [swap(v) for v in o]
        return o

    # json escapes the NUL markers to \u0000, so substitute on that form
    text = json.dumps(swap(doc), indent=2)
    return re.sub(r'"\\u0000(\d+)\\u0000"',
                  lambda mt: floats[int(mt.group(1))], text) + "\n"


def _fmt(v: float) -> str:
    return format(v, ".17g")


def write_plot_data(plot_dir, curve: RationalCurve, result, *,
                    n: int = 400, workers: int = 1) -> list[str]:
    """CSV error samples plus input/output polylines for external plotting."""
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)

    def error_csv():
        # samples with a vanished quadric gradient are unusable for plots
        lines = ["t,error"]
        for piece in result.pieces:
            for t, e in piece.report.samples:
                if math.isfinite(e):
                    lines.append(f"{_fmt(t)},{_fmt(e)}")
        (out / "error_samples.csv").write_text("\n".join(lines) + "\n")
        return "error_samples.csv"

    def input_csv():
        lo, hi = (float(v) for v in curve.domain)
        ts = np.linspace(lo, hi, n)
        pts = curve.evaluate_float(ts)
        lines = ["t,x,y,z"]
        lines += [f"{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}"
                  for t, p in zip(ts, pts)]
        (out / "input_polyline.csv").write_text("\n".join(lines) + "\n")
        return "input_polyline.csv"

    def output_csv():
        lo, hi = (float(v) for v in result.spline.span)
        ts = np.linspace(lo, hi, n)
        pts = result.spline.evaluate_float(ts)
        lines = ["t,x,y,z"]
        lines += [f"{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}"
                  for t, p in zip(ts, pts)]
        (out / "output_polyline.csv").write_text("\n".join(lines) + "\n")
        return "output_polyline.csv"

    jobs = (error_csv, input_csv, output_csv)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            names = list(pool.map(lambda fn: fn(), jobs))
    else:
        names = [fn() for fn in jobs]
    return sorted(names)
