"""Hénon dynamics over C((t)) with the t-adic absolute value |f| = r^ord(f).

Two levels are provided.  Classical points carry precision-tracked Laurent
coordinates and are iterated exactly.  Valuation points carry only the
orders (u, v) = (ord x, ord y) and are iterated by the tropical step, which
is exact whenever a single term dominates.

Green values are reported as exact rationals q with G = q * log(1/r).
On V+ the forward Green function is log|x|, so q = -ord(x_m) / d^m at the
escape step m.  On V- one inverse step multiplies |y| by |y|^(d-1)/|a|,
which gives G- = log|y| - log|a| / (d-1), i.e.
q = (-ord(y_m) + ord(a) / (d-1)) / d^m.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .complex_dynamics import Region
from .errors import InsufficientPrecision, InvalidRadius, TropicalTie
from .family import FamilyOrders, HenonFamily
from .laurent import (ORD_INF, LaurentPoly, TruncatedSeries, check_base,
                      invert_series, order_add, order_le, order_min)

DEFAULT_PRECISION = 64
MAX_PRECISION = 1024
DEFAULT_NA_BUDGET = 64

Order = Union[Fraction, int, type(ORD_INF)]
Coordinate = Union[TruncatedSeries, LaurentPoly]


def _frac(o):
    return o if o is ORD_INF else Fraction(o)


@dataclass(frozen=True)
class ValPoint:
    """Orders (u, v) of a point's coordinates: |x| = r^u, |y| = r^v."""

    u: Order
    v: Order

    def __post_init__(self):
        object.__setattr__(self, "u", _frac(self.u))
        object.__setattr__(self, "v", _frac(self.v))

    def to_json(self) -> list:
        return [_order_json(self.u), _order_json(self.v)]

    @classmethod
    def from_json(cls, data) -> "ValPoint":
        return cls(_order_from_json(data[0]), _order_from_json(data[1]))


def _order_json(o):
    if o is ORD_INF:
        return "inf"
    return [o.numerator, o.denominator]


def _order_from_json(o):
    if o == "inf":
        return ORD_INF
    if isinstance(o, list):
        return Fraction(o[0], o[1])
    return Fraction(o)


class NAStatus(enum.Enum):
    Exact = "Exact"
    BoundedToBudget = "BoundedToBudget"


@dataclass(frozen=True)
class NAGreenValue:
    """G = q * log(1/r); ``escape`` is the step at which the orbit escaped."""

    q: Fraction
    status: NAStatus
    escape: Optional[int] = None

    def value(self, r: float) -> float:
        import math
        return float(self.q) * math.log(1.0 / r)

    def to_json(self) -> dict:
        return {"q": [self.q.numerator, self.q.denominator], "status": self.status.value,
                "escape": self.escape}


@dataclass(frozen=True)
class NAPoint:
    """Classical point over C((t)).

    Coordinates are truncated series, or exact Laurent polynomials (used for
    exactly-zero coordinates).  ``source`` keeps the exact starting data so
    a computation can be restarted at higher precision.
    """

    x: Coordinate
    y: Coordinate
    r: float = 0.5
    rel_prec: int = DEFAULT_PRECISION
    source: Optional[Tuple[LaurentPoly, LaurentPoly]] = None

    def __post_init__(self):
        check_base(self.r)
        if all(isinstance(c, TruncatedSeries) and not c.has_known_order() for c in (self.x, self.y)):
            raise InsufficientPrecision("both coordinates have no known coefficient")

    @classmethod
    def from_laurent(cls, x, y, r: float = 0.5, rel_prec: int = DEFAULT_PRECISION) -> "NAPoint":
        x, y = LaurentPoly.coerce(x), LaurentPoly.coerce(y)
        return cls(_as_coordinate(x, rel_prec), _as_coordinate(y, rel_prec), r, rel_prec, (x, y))

    def with_precision(self, rel_prec: int) -> "NAPoint":
        if self.source is None:
            raise InsufficientPrecision("no exact source data to raise precision from")
        return NAPoint.from_laurent(self.source[0], self.source[1], self.r, rel_prec)

    def replace_coords(self, x: Coordinate, y: Coordinate) -> "NAPoint":
        return NAPoint(x, y, self.r, self.rel_prec, self.source)


def _as_coordinate(f: LaurentPoly, rel_prec: int) -> Coordinate:
    if f.is_zero():
        return f
    return TruncatedSeries.from_poly(f, f.order + rel_prec)


def _trim(c, rel_prec: int) -> Coordinate:
    if isinstance(c, TruncatedSeries):
        return c.truncate_relative(rel_prec)
    if c.is_zero():
        return c
    if len(c.terms()) > rel_prec:
        return TruncatedSeries.from_poly(c, c.order + rel_prec)
    return c


def na_val(p: NAPoint) -> ValPoint:
    return ValPoint(p.x.order, p.y.order)


def _known_order(c: Coordinate):
    """Order of c, or None when only a lower bound is known."""
    if isinstance(c, TruncatedSeries) and not c.has_known_order():
        return None
    return c.order


def na_norm(p: NAPoint) -> float:
    """max(r^ord x, r^ord y), valid when the maximum is certified."""
    ox, oy = _known_order(p.x), _known_order(p.y)
    if ox is not None and oy is not None:
        m = order_min(ox, oy)
        return 0.0 if m is ORD_INF else p.r ** m
    if ox is not None and ox is not ORD_INF and ox < p.y.order_lower_bound():
        return p.r ** ox
    if oy is not None and oy is not ORD_INF and oy < p.x.order_lower_bound():
        return p.r ** oy
    raise InsufficientPrecision("norm not determined by the known coefficients")


def _horner(family: HenonFamily, x: Coordinate):
    v = x
    for ai in family.a_coeffs[:-1]:
        v = (v + ai) * x
    return v + family.a_coeffs[-1]


def na_apply(family: HenonFamily, p: NAPoint) -> NAPoint:
    """(p(x) - a y, x) in precision-tracked arithmetic."""
    x1 = _horner(family, p.x) - family.a * p.y
    return p.replace_coords(_trim(x1, p.rel_prec), p.x)


def na_apply_inverse(family: HenonFamily, p: NAPoint) -> NAPoint:
    """(y, (p(y) - x) / a), dividing by a(t) through its inverse series."""
    num = _horner(family, p.y) - p.x
    a = family.a
    if isinstance(num, LaurentPoly) and a.is_monomial():
        y1 = num * (a ** -1)
    else:
        if isinstance(num, TruncatedSeries):
            rel = num.relative_precision if num.has_known_order() else p.rel_prec
        else:
            if num.is_zero():
                return p.replace_coords(p.y, num)
            rel = p.rel_prec
        y1 = num * invert_series(a, rel)
    return p.replace_coords(p.y, _trim(y1, p.rel_prec))


def _terms_forward(w: ValPoint, orders: FamilyOrders):
    d, u, v = orders.d, w.u, w.v
    terms = [(f"x^{d}", None if u is ORD_INF else d * u)]
    for i, oi in enumerate(orders.coeff_orders, start=1):
        if oi is ORD_INF:
            continue
        k = d - i
        if k == 0:
            val = Fraction(oi)
        else:
            val = None if u is ORD_INF else oi + k * u
        label = f"a_{i} x^{k}" if k else f"a_{i}"
        terms.append((label, val))
    terms.append(("a y", None if v is ORD_INF else orders.a_order + v))
    return [(lab, val) for lab, val in terms if val is not None]


def _terms_inverse(w: ValPoint, orders: FamilyOrders):
    d, u, v = orders.d, w.u, w.v
    terms = [(f"y^{d}", None if v is ORD_INF else d * v)]
    for i, oi in enumerate(orders.coeff_orders, start=1):
        if oi is ORD_INF:
            continue
        k = d - i
        val = Fraction(oi) if k == 0 else (None if v is ORD_INF else oi + k * v)
        terms.append((f"a_{i} y^{k}" if k else f"a_{i}", val))
    terms.append(("x", None if u is ORD_INF else u))
    return [(lab, val) for lab, val in terms if val is not None]


def _unique_min(terms, allow_tie: bool):
    if not terms:
        return ORD_INF, False
    m = min(val for _, val in terms)
    winners = [lab for lab, val in terms if val == m]
    if len(winners) > 1 and not allow_tie:
        raise TropicalTie(winners, m)
    return m, len(winners) > 1


def tropical_step(w: ValPoint, orders: FamilyOrders, inverse: bool = False) -> ValPoint:
    """Valuation-level image of w, exact when one term strictly dominates.

    Forward: u' = min(d u, ord a_i + (d - i) u, ord a + v), v' = u.
    Inverse: v' = min(d v, ord a_i + (d - i) v, u) - ord a, u' = v.
    """
    if inverse:
        m, _ = _unique_min(_terms_inverse(w, orders), False)
        return ValPoint(w.v, order_add(m, -orders.a_order))
    m, _ = _unique_min(_terms_forward(w, orders), False)
    return ValPoint(m, w.u)


def gauss_step(w: ValPoint, orders: FamilyOrders, inverse: bool = False) -> Tuple[ValPoint, bool]:
    """Tropical step with the Gauss-norm convention at ties (the minimum is
    taken even when attained twice).  Returns the image and a tie flag."""
    if inverse:
        m, tie = _unique_min(_terms_inverse(w, orders), True)
        return ValPoint(w.v, order_add(m, -orders.a_order)), tie
    m, tie = _unique_min(_terms_forward(w, orders), True)
    return ValPoint(m, w.u), tie


def check_radius(rho, orders: FamilyOrders) -> None:
    """R = r^rho must exceed max(|a_i|, |a|, 1): rho < every order and < 0."""
    bound = order_min(*orders.coeff_orders, orders.a_order, 0)
    if not rho < bound:
        raise InvalidRadius(f"radius exponent {rho} must be < {bound}")


def na_classify(w: ValPoint, rho, orders: Optional[FamilyOrders] = None) -> Region:
    """Region of w for the radius R = r^rho (tie-break VPlus, VMinus, W)."""
    if orders is not None:
        check_radius(rho, orders)
    if order_le(w.u, w.v) and order_le(w.u, rho):
        return Region.VPlus
    if order_le(w.v, rho):
        return Region.VMinus
    return Region.W


def _green_from_escape(w: ValPoint, m: int, d: int, sign: int, a_order) -> Fraction:
    if sign > 0:
        return -w.u / Fraction(d) ** m
    return (-w.v + Fraction(a_order, d - 1)) / Fraction(d) ** m


def _trapped(w: ValPoint, orders: FamilyOrders, sign: int) -> bool:
    """True when w lies in a polydisc {u >= 0, v >= 0} that the ultrametric
    inequality proves invariant: forward when every coefficient is integral,
    backward when in addition ord a <= 0.  Such orbits never reach V+ (resp. V-)."""
    if any(o is not ORD_INF and o < 0 for o in orders.coeff_orders):
        return False
    if sign > 0 and orders.a_order < 0:
        return False
    if sign < 0 and orders.a_order > 0:
        return False
    return order_le(0, w.u) and order_le(0, w.v)


def _na_green(family: HenonFamily, p, budget: int, sign: int, rho=None) -> NAGreenValue:
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    orders = family.orders()
    rho = orders.radius_exponent() if rho is None else rho
    check_radius(rho, orders)
    target = Region.VPlus if sign > 0 else Region.VMinus
    if isinstance(p, ValPoint):
        w = p
        for m in range(budget + 1):
            if na_classify(w, rho) == target:
                return NAGreenValue(_green_from_escape(w, m, family.d, sign, orders.a_order),
                                    NAStatus.Exact, m)
            if _trapped(w, orders, sign):
                break
            if m < budget:
                w = tropical_step(w, orders, inverse=sign < 0)
        return NAGreenValue(Fraction(0), NAStatus.BoundedToBudget, None)
    point = p
    while True:
        try:
            q = point
            for m in range(budget + 1):
                w = na_val(q)
                if na_classify(w, rho) == target:
                    return NAGreenValue(_green_from_escape(w, m, family.d, sign, orders.a_order),
                                        NAStatus.Exact, m)
                if _trapped(w, orders, sign):
                    break
                if m < budget:
                    q = na_apply(family, q) if sign > 0 else na_apply_inverse(family, q)
            return NAGreenValue(Fraction(0), NAStatus.BoundedToBudget, None)
        except InsufficientPrecision:
            if point.source is None or point.rel_prec * 2 > MAX_PRECISION:
                raise
            point = point.with_precision(point.rel_prec * 2)


def na_green_plus(family: HenonFamily, p, budget: int = DEFAULT_NA_BUDGET, rho=None) -> NAGreenValue:
    """Exact G+ of a classical point (exact iteration) or valuation point
    (tropical iteration; a tie raises TropicalTie)."""
    return _na_green(family, p, budget, 1, rho)


def na_green_minus(family: HenonFamily, p, budget: int = DEFAULT_NA_BUDGET, rho=None) -> NAGreenValue:
    return _na_green(family, p, budget, -1, rho)


def na_green_max(family: HenonFamily, p, budget: int = DEFAULT_NA_BUDGET, rho=None) -> NAGreenValue:
    """max(G+, G-); Exact only when both branches are exact."""
    gp = na_green_plus(family, p, budget, rho)
    gm = na_green_minus(family, p, budget, rho)
    best = gp if gp.q >= gm.q else gm
    status = NAStatus.Exact if gp.status == gm.status == NAStatus.Exact else NAStatus.BoundedToBudget
    return NAGreenValue(best.q, status, best.escape)


def gauss_green(family: HenonFamily, w: ValPoint, budget: int = DEFAULT_NA_BUDGET,
                sign: int = 1, rho=None) -> Tuple[Optional[Fraction], bool]:
    """Green value at the Gauss point of the polyannulus with orders w.

    The first step is exact at a Gauss point whatever the ties (the Gauss
    norm of a polynomial is the max of its monomial norms).  Later steps
    start from image points that need not be Gauss points, so a tie there
    is reported through the returned flag.  Returns (q or None, later_tie).
    """
    orders = family.orders()
    rho = orders.radius_exponent() if rho is None else rho
    target = Region.VPlus if sign > 0 else Region.VMinus
    later_tie = False
    for m in range(budget + 1):
        if na_classify(w, rho) == target:
            return _green_from_escape(w, m, family.d, sign, orders.a_order), later_tie
        if m < budget:
            w, tie = gauss_step(w, orders, inverse=sign < 0)
            if tie and m > 0:
                later_tie = True
    return None, later_tie


def tropical_orbit(family: HenonFamily, w: ValPoint, n: int, inverse: bool = False):
    """Up to n tropical steps; returns (orbit, tie or None)."""
    orders = family.orders()
    orbit = [w]
    for _ in range(n):
        try:
            w = tropical_step(w, orders, inverse)
        except TropicalTie as tie:
            return orbit, tie
        orbit.append(w)
    return orbit, None


@dataclass
class FiltrationReport:
    checked: dict = field(default_factory=lambda: {"V+ -> V+": 0, "V+ u W -> V+ u W": 0, "V- -> V- (inverse)": 0})
    violations: list = field(default_factory=list)
    ties_resolved: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _classical_representative(w: ValPoint, rng: random.Random, r: float) -> NAPoint:
    def coord(o):
        if o is ORD_INF:
            return LaurentPoly()
        if o.denominator != 1:
            raise ValueError("exact fallback needs integer orders")
        lead = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 9))
        tail = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        return LaurentPoly({int(o): lead, int(o) + 1: tail})
    return NAPoint.from_laurent(coord(w.u), coord(w.v), r)


def na_filtration_check(family: HenonFamily, sample: Sequence[ValPoint], rho=None,
                        rng: Optional[random.Random] = None, r: float = 0.5) -> FiltrationReport:
    """Check H(V+) in V+, H(V+ u W) in V+ u W and H^-1(V-) in V- on a sample.

    Points whose tropical step ties are replaced by a classical point with
    those orders and random coefficients, iterated exactly.
    """
    rng = rng or random.Random(0)
    orders = family.orders()
    rho = orders.radius_exponent() if rho is None else rho
    check_radius(rho, orders)
    report = FiltrationReport()

    def image(w, inverse):
        try:
            return tropical_step(w, orders, inverse)
        except TropicalTie:
            report.ties_resolved += 1
            p = _classical_representative(w, rng, r)
            q = na_apply_inverse(family, p) if inverse else na_apply(family, p)
            return na_val(q)

    for w in sample:
        region = na_classify(w, rho)
        if region == Region.VMinus:
            img = image(w, True)
            report.checked["V- -> V- (inverse)"] += 1
            if na_classify(img, rho) != Region.VMinus:
                report.violations.append((w, "V- -> V- (inverse)", img))
            continue
        img = image(w, False)
        new = na_classify(img, rho)
        report.checked["V+ u W -> V+ u W"] += 1
        if new == Region.VMinus:
            report.violations.append((w, "V+ u W -> V+ u W", img))
        if region == Region.VPlus:
            report.checked["V+ -> V+"] += 1
            if new != Region.VPlus:
                report.violations.append((w, "V+ -> V+", img))
    return report


def sample_valpoints(rng: random.Random, n: int, lo: int, hi: int) -> List[ValPoint]:
    return [ValPoint(rng.randint(lo, hi), rng.randint(lo, hi)) for _ in range(n)]


def certified_escape(family: HenonFamily, w: ValPoint, sign: int = 1,
                     budget: int = DEFAULT_NA_BUDGET, rho=None) -> bool:
    """True when the tropical orbit of w reaches V+ (sign > 0) or V- (sign < 0)
    through tie-free steps, so every classical point with orders w escapes."""
    orders = family.orders()
    rho = orders.radius_exponent() if rho is None else rho
    target = Region.VPlus if sign > 0 else Region.VMinus
    for m in range(budget + 1):
        if na_classify(w, rho) == target:
            return True
        if m == budget or _trapped(w, orders, sign):
            return False
        try:
            w = tropical_step(w, orders, inverse=sign < 0)
        except TropicalTie:
            return False
    return False


def tropical_core(family: HenonFamily, candidates: Sequence[ValPoint],
                  budget: int = DEFAULT_NA_BUDGET) -> List[ValPoint]:
    """Candidates not certified to escape in either direction.

    Classical points of the non-archimedean K+ and K- can only have orders
    in this set, so it bounds where the limit measure can live.
    """
    return [w for w in candidates
            if not certified_escape(family, w, 1, budget) and not certified_escape(family, w, -1, budget)]
