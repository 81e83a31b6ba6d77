"""Hénon families H_t(x, y) = (p_t(x) - a(t) y, x) with Laurent coefficients.

p_t(x) = x^d + a_1(t) x^(d-1) + ... + a_d(t).  A family produces a concrete
complex map at each parameter value and exposes the coefficient orders
used by the tropical step.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import DegenerateFamily
from .laurent import (ORD_INF, LaurentPoly, TruncatedSeries, exact_root,
                      invert_series, is_exact, series_root)

DEFAULT_C = 5.0


@dataclass(frozen=True)
class FamilyOrders:
    """t-adic orders of a_1..a_d and a (ORD_INF for vanishing coefficients)."""

    d: int
    coeff_orders: Tuple
    a_order: int

    def radius_exponent(self) -> int:
        """Exponent rho of the radius R = r^rho used on the non-archimedean side.

        R is the smallest power of r strictly larger than max(|a_i|, |a|, 1),
        i.e. rho = min(ord a_i, ord a, 0) - 1.
        """
        finite = [o for o in self.coeff_orders if o is not ORD_INF]
        return min(finite + [self.a_order, 0]) - 1


@dataclass(frozen=True)
class HenonFamily:
    d: int
    a_coeffs: Tuple[LaurentPoly, ...]
    a: LaurentPoly
    c: float = DEFAULT_C
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", tuple(LaurentPoly.coerce(f) for f in self.a_coeffs))
        object.__setattr__(self, "a", LaurentPoly.coerce(self.a))
        if self.d < 2:
            raise ValueError("degree must be at least 2")
        if len(self.a_coeffs) != self.d:
            raise ValueError(f"expected {self.d} coefficients a_1..a_d, got {len(self.a_coeffs)}")
        if self.a.is_zero():
            raise DegenerateFamily("a(t) vanishes identically")
        if not self.c > 1:
            raise ValueError("filtration constant c must exceed 1")

    def at(self, t0, c: Optional[float] = None):
        from .complex_dynamics import ComplexHenon
        t0 = complex(t0)
        if t0 == 0 or abs(t0) >= 1:
            raise ValueError("parameter must satisfy 0 < |t| < 1")
        return ComplexHenon(
            d=self.d,
            coeffs=tuple(f(t0) for f in self.a_coeffs),
            a=self.a(t0),
            c=self.c if c is None else c,
            t0=t0,
        )

    def orders(self) -> FamilyOrders:
        return FamilyOrders(self.d, tuple(f.order for f in self.a_coeffs), self.a.order)

    def is_exact(self) -> bool:
        return all(f.is_exact() for f in self.a_coeffs) and self.a.is_exact()

    def poly_coefficients(self) -> List[LaurentPoly]:
        """[1, a_1, ..., a_d] as Laurent polynomials (index i is the x^(d-i) term)."""
        return [LaurentPoly.constant(1)] + list(self.a_coeffs)

    def to_dict(self, exact: bool = False) -> dict:
        out = {
            "d": self.d,
            "a_coeffs": [f.to_json(exact) for f in self.a_coeffs],
            "a": self.a.to_json(exact),
            "c": self.c,
        }
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "HenonFamily":
        return cls(
            d=int(data["d"]),
            a_coeffs=tuple(LaurentPoly.from_json(rows) for rows in data["a_coeffs"]),
            a=LaurentPoly.from_json(data["a"]),
            c=float(data.get("c", DEFAULT_C)),
            name=str(data.get("name", "")),
        )

    def to_json(self, exact: bool = False) -> str:
        return json.dumps(self.to_dict(exact), sort_keys=True)


@dataclass(frozen=True)
class NormalizedFamily:
    """Monic conjugate of a general family over the parameter s, t = s^exponent.

    The conjugacy is sigma(x, y) = (lam x, mu y) with lam^(d-1) = a_0 and
    mu = lam / b.  Coefficients are known modulo s^prec in relative terms;
    ``exact`` is True when every series terminated.
    """

    family: HenonFamily
    exponent: int
    lam: TruncatedSeries
    mu: TruncatedSeries
    coeff_series: Tuple[TruncatedSeries, ...]
    a_series: LaurentPoly
    prec: int
    exact: bool


def normalize_family(lead_and_coeffs: Sequence[LaurentPoly], a: LaurentPoly, b: LaurentPoly,
                     prec: int = 24, c: float = DEFAULT_C) -> NormalizedFamily:
    """Conjugate (a_0 x^d + ... + a_d - a y, b x) to a monic Hénon family.

    ``lead_and_coeffs`` is [a_0, a_1, ..., a_d].  Writing t = s^(d-1) makes
    a_0 admit a (d-1)-th root lam(s).  Then with sigma(x, y) = (lam x, mu y),
    mu = lam / b, the conjugate sigma H sigma^-1 has first slot
    x^d + sum a_i lam^i / a_0 x^(d-i) - a b y and second slot x.
    """
    coeffs = [LaurentPoly.coerce(f) for f in lead_and_coeffs]
    a = LaurentPoly.coerce(a)
    b = LaurentPoly.coerce(b)
    d = len(coeffs) - 1
    if d < 2:
        raise ValueError("degree must be at least 2")
    if coeffs[0].is_zero():
        raise DegenerateFamily("leading coefficient a_0 vanishes identically")
    if b.is_zero():
        raise DegenerateFamily("b(t) vanishes identically")
    if a.is_zero():
        raise DegenerateFamily("a(t) vanishes identically")
    e = d - 1
    coeffs_s = [f.substitute_power(e) for f in coeffs]
    a0 = coeffs_s[0]
    lam = series_root(a0, e, prec)
    inv_a0 = invert_series(a0, prec)
    new_coeffs = []
    lam_power = lam
    for i in range(1, d + 1):
        if i > 1:
            lam_power = lam_power * lam
        new_coeffs.append(coeffs_s[i] * lam_power * inv_a0)
    new_a = (a * b).substitute_power(e)
    mu = lam * invert_series(b.substitute_power(e), prec)
    exact = _terminates(a0, e) and (b.is_monomial() or b == LaurentPoly.constant(1))
    polys = tuple(sr.to_poly() for sr in new_coeffs)
    fam = HenonFamily(d=d, a_coeffs=polys, a=new_a, c=c, name="normalized")
    result = NormalizedFamily(fam, e, lam, mu, tuple(new_coeffs), new_a, prec, exact)
    if not conjugation_identities_hold(coeffs, a, b, result):
        from .errors import StructureViolation
        raise StructureViolation("normalized family fails the conjugation identities")
    return result


def conjugation_identities_hold(lead_and_coeffs, a, b, result: NormalizedFamily) -> bool:
    """Symbolic check, modulo the tracked precision, of the identities that make
    sigma H sigma^-1 monic: lam^(d-1) = a_0, a_0 a_i' = a_i lam^i, a' = a b and
    mu b = lam, all after t = s^(d-1)."""
    e = result.exponent
    coeffs = [LaurentPoly.coerce(f).substitute_power(e) for f in lead_and_coeffs]
    lam = result.lam
    exact = all(is_exact(c) for _, c in lam.terms())
    tol = 0.0 if exact else 1e-9
    if not (lam ** e).agrees_with(coeffs[0], tol):
        return False
    power = lam
    for i, new in enumerate(result.coeff_series, start=1):
        if i > 1:
            power = power * lam
        if not (new * coeffs[0]).agrees_with(power * coeffs[i], tol):
            return False
    if result.a_series != (LaurentPoly.coerce(a) * LaurentPoly.coerce(b)).substitute_power(e):
        return False
    return (result.mu * LaurentPoly.coerce(b).substitute_power(e)).agrees_with(lam, tol)


def _terminates(a0: LaurentPoly, e: int) -> bool:
    if not a0.is_monomial():
        return False
    root = exact_root(a0.leading(), e)
    return is_exact(root)


def conjugation_defect(general_coeffs: Sequence[LaurentPoly], a: LaurentPoly, b: LaurentPoly,
                       result: NormalizedFamily, s0: complex, points) -> float:
    """Max |sigma H_t sigma^-1 (z) - H'_s (z)| at parameter s0 (t = s0^exponent).

    Independent numerical check of the conjugacy: the left side is built from
    the general family directly, the right side from the returned family.
    """
    a, b = LaurentPoly.coerce(a), LaurentPoly.coerce(b)
    t0 = s0 ** result.exponent
    d = len(general_coeffs) - 1
    lam = sum(complex(cf) * s0 ** k for k, cf in result.lam.terms())
    bt = b(t0)
    mu = lam / bt
    gen = [LaurentPoly.coerce(f)(t0) for f in general_coeffs]
    at = a(t0)
    mono = result.family.at(s0) if abs(s0) < 1 else None
    worst = 0.0
    for (X, Y) in points:
        x, y = X / lam, Y / mu
        px = sum(gen[i] * x ** (d - i) for i in range(d + 1))
        x1, y1 = px - at * y, bt * x
        lhs = (lam * x1, mu * y1)
        rhs = mono.apply(X, Y)
        worst = max(worst, abs(lhs[0] - rhs[0]), abs(lhs[1] - rhs[1]))
    return worst


def random_exact_laurent(rng: random.Random, lo: int, hi: int, terms: int = 2,
                         height: int = 5) -> LaurentPoly:
    """Random Laurent polynomial with small integer-rational coefficients."""
    out = {}
    for _ in range(terms):
        k = rng.randint(lo, hi)
        c = Fraction(rng.randint(-height, height), rng.randint(1, height))
        out[k] = out.get(k, 0) + c
    return LaurentPoly(out)
