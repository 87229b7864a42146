"""Exact polynomial helpers shared by the geometry modules.

Univariate bookkeeping (root isolation, gcds, resultants) leans on sympy's
exact arithmetic over QQ; the tensor-Bernstein sign certificates and the
subdivision search built on them are implemented here directly.  Exact
scalars cross module boundaries as ``fractions.Fraction``; sympy types stay
internal wherever practical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy as sp
from sympy import Poly, Rational

from .errors import ZeroPolynomialError

__all__ = [
    "RootInterval",
    "CertOutcome",
    "as_fraction",
    "as_rational",
    "poly_from_coeffs",
    "coeffs_of",
    "eval_coeffs",
    "isolate_real_roots",
    "refine_root",
    "signed_sqf_factor",
    "resultant",
    "poly_gcd",
    "squarefree_part",
    "remove_factor",
    "bernstein_sign_certificate",
    "certify_nonvanishing_box",
]


def as_fraction(x) -> Fraction:
    """Convert a sympy Rational / int / Fraction to ``Fraction``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    r = Rational(x)
    return Fraction(int(r.p), int(r.q))


def as_rational(x) -> Rational:
    """Convert a Fraction / int to a sympy Rational."""
    if isinstance(x, Fraction):
        return Rational(x.numerator, x.denominator)
    return Rational(x)


def poly_from_coeffs(coeffs: Sequence, var) -> Poly:
    """Build a sympy Poly from ascending coefficients over QQ."""
    expr = sum(as_rational(c) * var**i for i, c in enumerate(coeffs))
    return Poly(expr, var, domain="QQ")


def coeffs_of(p: Poly) -> list[Fraction]:
    """Ascending coefficient list of a univariate Poly, as Fractions."""
    return [as_fraction(c) for c in reversed(p.all_coeffs())]


def eval_coeffs(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    """Horner evaluation of ascending coefficients at an exact point."""
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


# ---------------------------------------------------------------------------
# real-root isolation


@dataclass(frozen=True)
class RootInterval:
    """Closed isolating interval [lo, hi] for one distinct real root.

    ``lo == hi`` means the root is the exact rational ``lo``.  For an
    irrational root the defining square-free factor changes sign across
    the interval and has no other root inside it.
    """

    lo: Fraction
    hi: Fraction
    multiplicity: int = 1

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __float__(self) -> float:
        return float(self.mid)

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi


def _nonzero(p: Poly) -> Poly:
    if p.is_zero:
        raise ZeroPolynomialError("indeterminate roots: zero polynomial")
    return p


def isolate_real_roots(
    p: Poly,
    lo: Fraction | None = None,
    hi: Fraction | None = None,
    width: Fraction | None = None,
) -> list[RootInterval]:
    """Isolate the distinct real roots of ``p`` in the closed interval [lo, hi].

    Returns sorted, pairwise disjoint :class:`RootInterval`s with
    multiplicities taken from the square-free factorization.  Rational
    roots come back as exact (degenerate) intervals.
    """
    _nonzero(p)
    if p.degree() <= 0:
        return []
    kwargs: dict = {"sqf": False}
    if lo is not None:
        kwargs["inf"] = as_rational(lo)
    if hi is not None:
        kwargs["sup"] = as_rational(hi)
    if width is not None and width > 0:
        kwargs["eps"] = as_rational(width)
    raw = p.intervals(**kwargs)
    out = []
    for (a, b), mult in raw:
        out.append(RootInterval(as_fraction(a), as_fraction(b), int(mult)))
    out.sort(key=lambda ri: (ri.lo, ri.hi))
    return out


def refine_root(p: Poly, ri: RootInterval, width: Fraction) -> RootInterval:
    """Shrink an isolating interval until ``hi - lo <= width``."""
    if ri.is_exact or ri.hi - ri.lo <= width:
        return ri
    refined = isolate_real_roots(p, ri.lo, ri.hi, width)
    inner = [r for r in refined if r.lo >= ri.lo and r.hi <= ri.hi]
    if len(inner) != 1:
        # endpoint roots of other factors can sneak into the closed query;
        # keep the interval that overlaps the original bracket
        inner = [r for r in refined if r.hi >= ri.lo and r.lo <= ri.hi]
    if len(inner) != 1:
        raise ZeroPolynomialError("isolation lost the root while refining")
    r = inner[0]
    return RootInterval(r.lo, r.hi, ri.multiplicity)


def signed_sqf_factor(p: Poly, ri: RootInterval) -> tuple[Poly, int]:
    """Square-free factor owning the root in ``ri`` and its sign just right of it.

    For an exact rational root the factor is (t - root) and the sign is +1.
    """
    t = p.gens[0]
    if ri.is_exact:
        return Poly(t - as_rational(ri.lo), t, domain="QQ"), 1
    for factor, _ in p.sqf_list()[1]:
        flo = factor.eval(as_rational(ri.lo))
        fhi = factor.eval(as_rational(ri.hi))
        if flo != 0 and fhi != 0 and (flo < 0) != (fhi < 0):
            return factor, (1 if fhi > 0 else -1)
    raise ZeroPolynomialError("no square-free factor changes sign on the bracket")


# ---------------------------------------------------------------------------
# resultants


def _interp_resultant(p: Poly, q: Poly, elim, keep) -> Poly:
    """res_elim(p, q) by specialization at integer nodes plus interpolation."""
    dp_e, dq_e = p.degree(elim), q.degree(elim)
    dp_k, dq_k = p.degree(keep), q.degree(keep)
    bound = dq_e * dp_k + dp_e * dq_k
    lc_p = Poly(p.as_expr().coeff(elim, dp_e), keep, domain="QQ")
    lc_q = Poly(q.as_expr().coeff(elim, dq_e), keep, domain="QQ")
    nodes: list[Rational] = []
    values: list[Rational] = []
    x = 0
    while len(nodes) < bound + 1:
        for cand in (Rational(x), Rational(-x)) if x else (Rational(0),):
            if len(nodes) >= bound + 1:
                break
            if lc_p.eval(cand) == 0 or lc_q.eval(cand) == 0:
                continue
            pe = Poly(p.as_expr().subs(keep, cand), elim, domain="QQ")
            qe = Poly(q.as_expr().subs(keep, cand), elim, domain="QQ")
            nodes.append(cand)
            values.append(pe.resultant(qe))
        x += 1
    # Newton's divided differences, exact over QQ
    n = len(nodes)
    table = list(values)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            table[i] = (table[i] - table[i - 1]) / (nodes[i] - nodes[i - j])
    acc = Poly(0, keep, domain="QQ")
    basis = Poly(1, keep, domain="QQ")
    for j in range(n):
        acc = acc + basis * table[j]
        basis = basis * Poly(keep - nodes[j], keep, domain="QQ")
    return acc


def resultant(p: Poly, q: Poly, elim) -> Poly:
    """Resultant of p and q eliminating ``elim``; exact over QQ.

    For bivariate inputs whose product degree makes the subresultant chain
    slow, switches to evaluation/interpolation (identical exact result).
    """
    gens = [g for g in set(p.gens) | set(q.gens) if g != elim]
    if len(gens) == 1:
        keep = gens[0]
        pp = Poly(p.as_expr(), elim, keep, domain="QQ")
        qq = Poly(q.as_expr(), elim, keep, domain="QQ")
        cost = pp.degree(elim) * qq.degree(keep) + qq.degree(elim) * pp.degree(keep)
        if cost > 120:
            return _interp_resultant(pp, qq, elim, keep)
    r = sp.resultant(p.as_expr(), q.as_expr(), elim)
    if gens:
        return Poly(r, *sorted(gens, key=str), domain="QQ")
    return Poly(r, elim, domain="QQ")  # constant; keep a handle


def poly_gcd(*ps: Poly) -> Poly:
    """Monic gcd of the given polynomials over QQ."""
    acc = ps[0]
    for p in ps[1:]:
        acc = acc.gcd(p)
    return acc.monic() if acc.degree() > 0 or not acc.is_zero else acc


def squarefree_part(p: Poly) -> Poly:
    """Square-free part (multivariate allowed); preserves the zero set."""
    return _nonzero(p).sqf_part()


def remove_factor(p: Poly, factor: Poly) -> tuple[Poly, int]:
    """Divide ``factor`` out of ``p`` as often as it divides exactly."""
    count = 0
    while True:
        quot, rem = sp.div(p.as_expr(), factor.as_expr(), *p.gens)
        if rem != 0:
            return p, count
        p = Poly(quot, *p.gens, domain="QQ")
        count += 1
        if p.is_zero:
            raise ZeroPolynomialError("factor removal annihilated the polynomial")


# ---------------------------------------------------------------------------
# tensor Bernstein certificates

_BINOMIAL_CACHE: dict[int, list[int]] = {}


def _binrow(n: int) -> list[int]:
    row = _BINOMIAL_CACHE.get(n)
    if row is None:
        row = [math.comb(n, k) for k in range(n + 1)]
        _BINOMIAL_CACHE[n] = row
    return row


def poly_tensor(p: Poly) -> np.ndarray:
    """Dense integer coefficient tensor of ``p`` (positive scale dropped).

    Axis k indexes the power of ``p.gens[k]``; entries are python ints with
    an overall positive rational scale removed, so signs are faithful.
    """
    _nonzero(p)
    degs = [p.degree(g) for g in p.gens]
    degs = [max(d, 0) for d in degs]
    T = np.zeros([d + 1 for d in degs], dtype=object)
    den = 1
    terms = p.terms()
    for _, c in terms:
        den = math.lcm(den, int(Rational(c).q))
    for monom, c in terms:
        r = Rational(c)
        T[tuple(monom)] = int(r.p) * (den // int(r.q))
    return _normalize_tensor(T)


def _normalize_tensor(T: np.ndarray) -> np.ndarray:
    g = 0
    for v in T.flat:
        g = math.gcd(g, abs(v))
        if g == 1:
            return T
    if g > 1:
        T = T // g
    return T


def _box_matrix_int(d: int, lo: Fraction, hi: Fraction) -> np.ndarray:
    """Integer matrix taking power coefficients on [lo, hi] to a positive
    multiple of the Bernstein coefficients of that restriction."""
    qden = (lo.denominator * hi.denominator) // math.gcd(lo.denominator, hi.denominator)
    pa = lo.numerator * (qden // lo.denominator)
    ph = hi.numerator * (qden // hi.denominator) - pa
    bd = _binrow(d)
    L = 1
    for k in range(d + 1):
        L = math.lcm(L, bd[k])
    M = np.zeros((d + 1, d + 1), dtype=object)
    pow_a = [pa**e for e in range(d + 1)]
    pow_h = [ph**e for e in range(d + 1)]
    pow_q = [qden**e for e in range(d + 1)]
    for j in range(d + 1):
        bj = _binrow(j)
        for i in range(d + 1):
            bi = _binrow(i)
            acc = 0
            for k in range(min(i, j) + 1):
                acc += bj[k] * bi[k] * (L // bd[k]) * pow_a[i - k] * pow_h[k]
            M[j, i] = acc * pow_q[d - i]
    return M


def _apply_matrix(T: np.ndarray, M: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(M, T, axes=(1, axis))
    return np.moveaxis(out, 0, axis)


def bernstein_tensor(T: np.ndarray, box: Sequence[tuple[Fraction, Fraction]]) -> np.ndarray:
    """Scaled-integer tensor Bernstein coefficients of T's polynomial on the box."""
    for axis, (lo, hi) in enumerate(box):
        M = _box_matrix_int(T.shape[axis] - 1, Fraction(lo), Fraction(hi))
        T = _apply_matrix(T, M, axis)
    return _normalize_tensor(T)


def _tensor_sign(T: np.ndarray) -> str:
    pos = neg = zero = 0
    for v in T.flat:
        if v > 0:
            pos += 1
        elif v < 0:
            neg += 1
        else:
            zero += 1
    if neg == 0 and zero == 0:
        return "positive"
    if pos == 0 and zero == 0:
        return "negative"
    return "mixed"


def bernstein_sign_certificate(p: Poly, box: Sequence[tuple[Fraction, Fraction]]) -> str:
    """One-shot sign certificate on an axis-aligned box.

    Returns "positive" / "negative" when every Bernstein coefficient of the
    restriction is strictly positive / negative (sound), else "indeterminate".
    """
    T = bernstein_tensor(poly_tensor(p), box)
    s = _tensor_sign(T)
    return s if s != "mixed" else "indeterminate"


def _split_axis(T: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """de Casteljau halving of a Bernstein tensor along one axis (int scaled)."""
    W = np.moveaxis(T, axis, 0)
    n = W.shape[0]
    left = np.empty_like(W)
    right = np.empty_like(W)
    left[0] = W[0]
    right[n - 1] = W[n - 1]
    cur = W
    for k in range(1, n):
        cur = cur[:-1] + cur[1:]
        left[k] = cur[0]
        right[n - 1 - k] = cur[-1]
    for k in range(n):
        scale = 1 << (n - 1 - k)
        if scale != 1:
            left[k] = left[k] * scale
            right[n - 1 - k] = right[n - 1 - k] * scale
    return (
        _normalize_tensor(np.moveaxis(left, 0, axis)),
        _normalize_tensor(np.moveaxis(right, 0, axis)),
    )


Box = tuple[tuple[Fraction, Fraction], ...]


@dataclass
class CertOutcome:
    """Result of a subdivision sign-certificate search.

    ``positive``/``negative`` mean one strict sign everywhere; a
    ``nonvanishing`` verdict means every unexcused sub-box is strictly
    signed but excused zones separate regions of opposite sign.  Either
    way the polynomial has no zero on the box outside pruned sub-regions
    and recorded exemptions.
    """

    status: str          # "positive" | "negative" | "nonvanishing" | "indeterminate"
    leaves: int = 0
    exemptions: list[Box] = field(default_factory=list)
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status in ("positive", "negative", "nonvanishing")


def certify_nonvanishing_box(
    p: Poly,
    box: Sequence[tuple[Fraction, Fraction]],
    *,
    exempt_points: Iterable[Sequence[Fraction]] = (),
    exempt_values: Iterable[Fraction] = (),
    exempt_scale: Fraction | None = None,
    prune: Callable[[Box], bool] | None = None,
    max_depth: int = 14,
    max_nodes: int = 3000,
) -> CertOutcome:
    """Certify that ``p`` has no zero on the box, by adaptive Bernstein
    subdivision with exact integer arithmetic.

    ``prune(box) -> True`` drops sub-boxes wholly outside the quantified
    region.  Two kinds of excused zones are recorded instead of failing
    the search: a mixed-sign sub-box of width at most ``exempt_scale``
    whose closure contains one of ``exempt_points``, and a sub-box lying
    within ``exempt_scale`` of one of ``exempt_values`` along some axis
    (a thin collar strip).  Callers account for excused zones separately.
    """
    box = tuple((Fraction(a), Fraction(b)) for a, b in box)
    exempt = [tuple(Fraction(c) for c in pt) for pt in exempt_points]
    strips = [Fraction(v) for v in exempt_values]
    T0 = bernstein_tensor(poly_tensor(p), box)
    stack: list[tuple[Box, np.ndarray, int]] = [(box, T0, 0)]
    out = CertOutcome(status="indeterminate")
    seen = {"positive": 0, "negative": 0}
    nodes = 0
    while stack:
        b, T, depth = stack.pop()
        nodes += 1
        if nodes > max_nodes:
            out.reason = "node budget exhausted"
            return out
        if prune is not None and prune(b):
            continue
        s = _tensor_sign(T)
        if s != "mixed":
            seen[s] += 1
            out.leaves += 1
            continue
        widths = [hi - lo for lo, hi in b]
        if exempt_scale is not None:
            if strips and any(
                v - exempt_scale <= lo and hi <= v + exempt_scale
                for v in strips for lo, hi in b
            ):
                out.exemptions.append(b)
                continue
            if exempt and max(widths) <= exempt_scale and any(
                all(lo <= c <= hi for c, (lo, hi) in zip(pt, b)) for pt in exempt
            ):
                out.exemptions.append(b)
                continue
        if depth >= max_depth:
            out.reason = "depth limit with mixed signs"
            return out
        axis = max(range(len(b)), key=lambda k: widths[k])
        TL, TR = _split_axis(T, axis)
        lo, hi = b[axis]
        mid = (lo + hi) / 2
        bl = b[:axis] + ((lo, mid),) + b[axis + 1 :]
        br = b[:axis] + ((mid, hi),) + b[axis + 1 :]
        stack.append((bl, TL, depth + 1))
        stack.append((br, TR, depth + 1))
    if seen["positive"] and seen["negative"]:
        if out.exemptions:
            # opposite signs live in components separated by excused zones
            out.status = "nonvanishing"
        else:
            out.reason = "certified leaves of both signs"
        return out
    if seen["positive"]:
        out.status = "positive"
    elif seen["negative"]:
        out.status = "negative"
    else:
        # every box was pruned or exempted; nothing left to certify
        out.status = "indeterminate"
        out.reason = "no certified leaves"
    return out
