"""Symbolic iterates of a Hénon family and their projective homogenization.

Forward iterates H^n = (H1_n, H2_n) are polynomials in (x, y) with Laurent
coefficients.  Backward iterates divide by a(t) at every step; they are kept
as a numerator polynomial together with a power of a, so that
H^-n = (N1 / a^e1, N2 / a^e2) holds exactly for any a(t), not only
monomials.  With e_n = (d^n - 1)/(d - 1) the numerators stay polynomial:

    N2_{n+1} = sum_i a_i N2_n^(d-i) a^(e_n i) - N1_n a^(d e_n - e1_n),

where a_0 = 1, N1_{n+1} = N2_n and e_{n+1} = d e_n + 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import mpmath
import numpy as np

from .errors import BudgetExceeded, StructureViolation
from .family import HenonFamily
from .laurent import ORD_INF, ComplexRational, LaurentPoly, order_min

DEFAULT_SYMBOLIC_BUDGET = 64


class BivarPoly:
    """Polynomial in x, y with LaurentPoly coefficients, keyed by (i, j)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Dict[Tuple[int, int], LaurentPoly]] = None):
        clean = {}
        for key, c in (terms or {}).items():
            c = LaurentPoly.coerce(c)
            if not c.is_zero():
                clean[tuple(key)] = c
        self._terms = dict(sorted(clean.items()))

    @classmethod
    def x(cls) -> "BivarPoly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "BivarPoly":
        return cls({(0, 1): 1})

    @classmethod
    def constant(cls, c) -> "BivarPoly":
        return cls({(0, 0): c})

    @classmethod
    def coerce(cls, other) -> "BivarPoly":
        return other if isinstance(other, BivarPoly) else cls.constant(other)

    @property
    def terms(self) -> Dict[Tuple[int, int], LaurentPoly]:
        return dict(self._terms)

    def coefficient(self, i: int, j: int) -> LaurentPoly:
        return self._terms.get((i, j), LaurentPoly())

    def is_zero(self) -> bool:
        return not self._terms

    def total_degree(self) -> int:
        return max((i + j for i, j in self._terms), default=-1)

    def __add__(self, other):
        other = BivarPoly.coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return BivarPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BivarPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-BivarPoly.coerce(other))

    def __rsub__(self, other):
        return BivarPoly.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, BivarPoly):
            c = LaurentPoly.coerce(other)
            return BivarPoly({k: v * c for k, v in self._terms.items()})
        out: Dict[Tuple[int, int], LaurentPoly] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                prod = c1 * c2
                out[key] = out[key] + prod if key in out else prod
        return BivarPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "BivarPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = BivarPoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivarPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*x^{i}*y^{j}" for (i, j), c in self._terms.items()) or "0"
        return f"BivarPoly({body})"

    def homogenize(self, degree: int) -> "TriPoly":
        if self.total_degree() > degree:
            raise ValueError(f"total degree {self.total_degree()} exceeds {degree}")
        return TriPoly({(i, j, degree - i - j): c for (i, j), c in self._terms.items()})

    def evaluate(self, x, y, t0):
        return self.homogenize(max(self.total_degree(), 0)).evaluate(x, y, 1.0, t0)


def _to_long(q) -> np.longdouble:
    q = Fraction(q)
    if q.denominator == 1 and abs(q.numerator) < 2 ** 63:
        return np.longdouble(q.numerator)
    with mpmath.workprec(128):
        return np.longdouble(mpmath.nstr(mpmath.mpf(q.numerator) / q.denominator, 30))


def coefficient_value(c: LaurentPoly, t0, extended: bool = False):
    """c(t0), in long double precision when ``extended``."""
    if not extended:
        return c(t0)
    t0 = complex(t0)
    if c.is_exact():
        v = c.evaluate_exact(ComplexRational(Fraction(t0.real), Fraction(t0.imag)))
        v = v if isinstance(v, ComplexRational) else ComplexRational(v)
        return np.clongdouble(_to_long(v.re)) + 1j * np.clongdouble(_to_long(v.im))
    tl = np.clongdouble(t0)
    total = np.clongdouble(0)
    for k, cf in c.terms():
        total += np.clongdouble(complex(cf)) * tl ** k
    return total


class TriPoly:
    """Trivariate polynomial in X, Y, Z with LaurentPoly coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Dict[Tuple[int, int, int], LaurentPoly]):
        self._terms = {tuple(k): LaurentPoly.coerce(c) for k, c in sorted(terms.items())
                       if not LaurentPoly.coerce(c).is_zero()}

    @property
    def terms(self) -> Dict[Tuple[int, int, int], LaurentPoly]:
        return dict(self._terms)

    def coefficient(self, i: int, j: int, k: int) -> LaurentPoly:
        return self._terms.get((i, j, k), LaurentPoly())

    def degrees(self) -> set:
        return {i + j + k for i, j, k in self._terms}

    def z_slice(self) -> "TriPoly":
        """Restriction to Z = 0."""
        return TriPoly({key: c for key, c in self._terms.items() if key[2] == 0})

    def dehomogenize(self) -> BivarPoly:
        out: Dict[Tuple[int, int], LaurentPoly] = {}
        for (i, j, _), c in self._terms.items():
            out[(i, j)] = out[(i, j)] + c if (i, j) in out else c
        return BivarPoly(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*X^{i}*Y^{j}*Z^{k}" for (i, j, k), c in self._terms.items()) or "0"
        return f"TriPoly({body})"

    def evaluate(self, X, Y, Z, t0, extended: bool = False):
        """Complex value at arrays (X, Y, Z) for the parameter t0.

        ``extended`` evaluates in long double with coefficients rounded once
        from their exact values, which absorbs most cancellation between the
        expanded monomials.
        """
        dtype = np.clongdouble if extended else complex
        X, Y, Z = (np.asarray(v).astype(dtype) for v in (X, Y, Z))
        out = np.zeros(np.broadcast(X, Y, Z).shape, dtype=dtype)
        cache: Dict[Tuple[int, int], np.ndarray] = {}

        def power(base, idx, k):
            key = (idx, k)
            if key not in cache:
                cache[key] = base ** k
            return cache[key]

        for (i, j, k), c in self._terms.items():
            out = out + coefficient_value(c, t0, extended) * power(X, 0, i) * power(Y, 1, j) * power(Z, 2, k)
        return out

    def evaluate_series(self, x, y, z=None):
        """Value at a point over C((t)); coordinates may be series or Laurent polys."""
        z = LaurentPoly.constant(1) if z is None else z
        powers = {}

        def power(name, base, k):
            key = (name, k)
            if key not in powers:
                powers[key] = LaurentPoly.constant(1) if k == 0 else (
                    base if k == 1 else power(name, base, k - 1) * base)
            return powers[key]

        total = LaurentPoly()
        for (i, j, k), c in self._terms.items():
            total = total + c * power("x", x, i) * power("y", y, j) * power("z", z, k)
        return total

    def to_json(self, exact: bool = False) -> list:
        return [[[i, j, k], c.to_json(exact)] for (i, j, k), c in self._terms.items()]

    @classmethod
    def from_json(cls, rows) -> "TriPoly":
        return cls({tuple(key): LaurentPoly.from_json(c) for key, c in rows})


@dataclass(frozen=True)
class Iterates:
    """H^n and H^-n; backward coordinates are numerator / a^power."""

    n: int
    forward: Tuple[BivarPoly, BivarPoly]
    backward: Tuple[BivarPoly, BivarPoly]
    backward_powers: Tuple[int, int]


def _p_of(family: HenonFamily, f: BivarPoly) -> BivarPoly:
    v = f
    for ai in family.a_coeffs[:-1]:
        v = (v + ai) * f
    return v + family.a_coeffs[-1]


def compose_iterates(family: HenonFamily, n: int,
                     budget: int = DEFAULT_SYMBOLIC_BUDGET) -> Iterates:
    """Exact symbolic H^n and H^-n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    d = family.d
    if d ** n > budget:
        raise BudgetExceeded(f"d^n = {d ** n} exceeds the symbolic budget {budget}")
    x, y = BivarPoly.x(), BivarPoly.y()
    fx, fy = x, y
    for _ in range(n):
        fx, fy = _p_of(family, fx) - fy * family.a, fx
    a = family.a
    n1, n2, e1, e2 = x, y, 0, 0
    for _ in range(n):
        acc = n2 ** d
        for i, ai in enumerate(family.a_coeffs, start=1):
            acc = acc + (n2 ** (d - i)) * (ai * a ** (e2 * i))
        new = acc - n1 * a ** (d * e2 - e1)
        n1, e1, n2, e2 = n2, e2, new, d * e2 + 1
    return Iterates(n, (fx, fy), (n1, n2), (e1, e2))


@dataclass(frozen=True)
class Section:
    """A homogeneous section numerator / a(t)^a_power."""

    poly: TriPoly
    a_power: int = 0

    def evaluate(self, X, Y, Z, t0, a_value, extended: bool = False):
        return self.poly.evaluate(X, Y, Z, t0, extended) / (a_value ** self.a_power)

    def order_at(self, x, y, a: LaurentPoly, z=None):
        """t-adic order of the section at a point over C((t))."""
        val = self.poly.evaluate_series(x, y, z)
        if isinstance(val, LaurentPoly) and val.is_zero():
            return ORD_INF
        o = val.order
        return o - self.a_power * a.order

    def to_json(self, exact: bool = False) -> dict:
        return {"a_power": self.a_power, "terms": self.poly.to_json(exact)}


SECTION_NAMES = ("F1_forward", "F2_forward", "F1_backward", "F2_backward", "Z_power")


@dataclass(frozen=True)
class HomogeneousDatum:
    n: int
    d: int
    sections: Tuple[Section, ...]
    a: LaurentPoly

    @property
    def degree(self) -> int:
        return self.d ** self.n

    def check_structure(self) -> None:
        """Raise StructureViolation unless the section list has the expected shape."""
        D = self.degree
        if len(self.sections) != 5:
            raise StructureViolation("expected five sections")
        for name, s in zip(SECTION_NAMES, self.sections):
            if s.poly.degrees() - {D}:
                raise StructureViolation(f"{name} is not homogeneous of degree {D}")
        f1, f2, g1, g2, z = self.sections
        one = LaurentPoly.constant(1)
        if f1.a_power != 0 or f1.poly.coefficient(D, 0, 0) != one:
            raise StructureViolation("forward first section is not X^D + Z*(...)")
        if g2.poly.coefficient(0, D, 0) != one:
            raise StructureViolation("backward second numerator is not Y^D + Z*(...)")
        for name, s, keep in (("F1_forward", f1, (D, 0, 0)), ("F2_backward", g2, (0, D, 0))):
            if any(k[2] == 0 and k != keep for k in s.poly.terms):
                raise StructureViolation(f"{name} has extra terms at Z = 0")
        for name, s in (("F2_forward", f2), ("F1_backward", g1)):
            if s.poly.z_slice().terms:
                raise StructureViolation(f"{name} is not divisible by Z")
        if z.poly != TriPoly({(0, 0, D): 1}) or z.a_power:
            raise StructureViolation("fifth section is not Z^D")

    def z_slice(self) -> List[TriPoly]:
        """Sections restricted to Z = 0, backward ones with the a-power applied
        (exact only when a is a monomial)."""
        out = []
        for s in self.sections:
            poly = s.poly.z_slice()
            if s.a_power and poly.terms:
                if not self.a.is_monomial():
                    raise ValueError("a(t) is not a monomial; the slice has a series coefficient")
                scale = self.a ** (-s.a_power)
                poly = TriPoly({k: c * scale for k, c in poly.terms.items()})
            out.append(poly)
        return out

    def evaluate_sections(self, X, Y, Z, t0, extended: bool = False) -> np.ndarray:
        a_value = coefficient_value(self.a, t0, extended)
        return np.stack([s.evaluate(X, Y, Z, t0, a_value, extended) for s in self.sections])

    def to_json(self, exact: bool = False) -> dict:
        return {"n": self.n, "d": self.d, "degree": self.degree, "a": self.a.to_json(exact),
                "sections": {name: s.to_json(exact) for name, s in zip(SECTION_NAMES, self.sections)}}


def homogenize_datum(family: HenonFamily, n: int,
                     budget: int = DEFAULT_SYMBOLIC_BUDGET) -> HomogeneousDatum:
    it = compose_iterates(family, n, budget)
    D = family.d ** n
    secs = (
        Section(it.forward[0].homogenize(D)),
        Section(it.forward[1].homogenize(D)),
        Section(it.backward[0].homogenize(D), it.backward_powers[0]),
        Section(it.backward[1].homogenize(D), it.backward_powers[1]),
        Section(TriPoly({(0, 0, D): 1})),
    )
    datum = HomogeneousDatum(n, family.d, secs, family.a)
    datum.check_structure()
    return datum


def model_function_phi(datum: HomogeneousDatum, X, Y, Z, t0, normalized: bool = True,
                       extended: bool = False):
    """log of the max section modulus, divided by the Fubini-Study factor
    (|X|^2 + |Y|^2 + |Z|^2)^(D/2) when ``normalized``."""
    vals = np.abs(datum.evaluate_sections(X, Y, Z, t0, extended))
    out = np.log(vals.max(axis=0))
    if normalized:
        dtype = np.longdouble if extended else float
        sq = sum(np.abs(np.asarray(v)).astype(dtype) ** 2 for v in (X, Y, Z))
        out = out - 0.5 * datum.degree * np.log(sq)
    return np.asarray(out, dtype=float)


def na_model_function_g(datum: HomogeneousDatum, p, normalized: bool = True) -> Fraction:
    """Non-archimedean model function at a classical point on the chart Z = 1.

    Returned as the exact rational s with g = s * log(1/r): the max of the
    section norms is r^(min order), and the normalization subtracts
    D * log max(|x|, |y|, 1).
    """
    orders = [s.order_at(p.x, p.y, datum.a) for s in datum.sections]
    m = order_min(*orders)
    value = Fraction(-m)
    if normalized:
        chart = order_min(p.x.order, p.y.order, 0)
        value -= datum.degree * Fraction(-chart)
    return value


def na_green_n(datum: HomogeneousDatum, p) -> Fraction:
    """(1/d^n) log max(|H^n|, |H^-n|, 1) in units of log(1/r)."""
    return na_model_function_g(datum, p, normalized=False) / datum.degree


def coefficient_growth(family: HenonFamily, ns: Iterable[int], r: float = 0.5,
                       budget: int = DEFAULT_SYMBOLIC_BUDGET) -> List[dict]:
    """Per n: max log hybrid norm of section numerator coefficients, over d^n."""
    rows = []
    for n in ns:
        datum = homogenize_datum(family, n, budget)
        worst = 0.0
        for s in datum.sections:
            for c in s.poly.terms.values():
                worst = max(worst, math.log(c.hybrid_norm(r)))
        rows.append({"n": n, "degree": datum.degree, "max_log_hybrid_norm": worst,
                     "growth_constant": worst / datum.degree,
                     "a_powers": [s.a_power for s in datum.sections]})
    return rows


def datum_to_json(datum: HomogeneousDatum, exact: bool = True) -> str:
    return json.dumps(datum.to_json(exact), sort_keys=True)


def model_identity_residual(datum: HomogeneousDatum, H, x, y) -> np.ndarray:
    """phi / d^n - G_n + (1/2) log(|x|^2 + |y|^2 + 1) on the chart Z = 1.

    phi is evaluated in extended precision from the expanded sections and
    G_n by iterating the map, so the residual compares two independent routes.
    """
    from .complex_dynamics import green_n_array
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    phi = model_function_phi(datum, x, y, np.ones_like(x), H.t0, normalized=True, extended=True)
    g = green_n_array(H, x, y, datum.n, 0)
    fs = 0.5 * np.log(np.abs(x) ** 2 + np.abs(y) ** 2 + 1.0)
    return phi / datum.degree - g + fs
