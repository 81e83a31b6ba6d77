"""Laurent polynomials and truncated Laurent series in one variable t.

Coefficients may be exact (``int``, ``Fraction``, :class:`ComplexRational`)
or floating (``float``, ``complex``).  Exact coefficients are what the
non-archimedean code relies on: orders and ties are decided by exact zero
tests, never by a rounding threshold.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Tuple, Union


class OrderInfinity(enum.Enum):
    """Order of the zero element."""

    INF = "inf"

    def __repr__(self) -> str:
        return "ORD_INF"

    def __str__(self) -> str:
        return "inf"


ORD_INF = OrderInfinity.INF


def order_min(*orders):
    """Minimum of orders, treating ORD_INF as larger than every number."""
    finite = [o for o in orders if o is not ORD_INF]
    return min(finite) if finite else ORD_INF


def order_add(a, b):
    if a is ORD_INF or b is ORD_INF:
        return ORD_INF
    return a + b


def order_le(a, b) -> bool:
    """a <= b in the extended order (ORD_INF is the top element)."""
    if b is ORD_INF:
        return True
    if a is ORD_INF:
        return False
    return a <= b


class ComplexRational:
    """An element of Q(i) with exact Fraction real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _parts(other):
        if isinstance(other, ComplexRational):
            return other.re, other.im
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        parts = self._parts(other)
        if parts is None:
            return complex(self) + other
        return ComplexRational(self.re + parts[0], self.im + parts[1])

    __radd__ = __add__

    def __sub__(self, other):
        parts = self._parts(other)
        if parts is None:
            return complex(self) - other
        return ComplexRational(self.re - parts[0], self.im - parts[1])

    def __rsub__(self, other):
        parts = self._parts(other)
        if parts is None:
            return other - complex(self)
        return ComplexRational(parts[0] - self.re, parts[1] - self.im)

    def __mul__(self, other):
        parts = self._parts(other)
        if parts is None:
            return complex(self) * other
        c, d = parts
        return ComplexRational(self.re * c - self.im * d, self.re * d + self.im * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        parts = self._parts(other)
        if parts is None:
            return complex(self) / other
        return self * ComplexRational(*parts).inverse()

    def __rtruediv__(self, other):
        parts = self._parts(other)
        if parts is None:
            return other / complex(self)
        return ComplexRational(*parts) * self.inverse()

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = ComplexRational(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "ComplexRational":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return ComplexRational(self.re / n, -self.im / n)

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    def norm_squared(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        parts = self._parts(other)
        if parts is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self.re == parts[0] and self.im == parts[1]

    def __hash__(self) -> int:
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def __repr__(self) -> str:
        return f"ComplexRational({self.re}, {self.im})"


Coefficient = Union[int, Fraction, ComplexRational, float, complex]

EXACT_TYPES = (int, Fraction, ComplexRational)


def is_exact(c) -> bool:
    return isinstance(c, EXACT_TYPES)


def coefficient_inverse(c):
    if isinstance(c, int):
        return Fraction(1, c)
    if isinstance(c, (Fraction, ComplexRational)):
        return 1 / c
    return 1.0 / c


def make_coefficient(re, im=0):
    """Exact coefficient when both parts are exact, else a Python complex."""
    if isinstance(re, (int, Fraction)) and isinstance(im, (int, Fraction)):
        if im == 0:
            return re
        return ComplexRational(re, im)
    return complex(re, im)


def check_base(r) -> None:
    if not 0 < r < 1:
        raise ValueError(f"base r must lie in (0, 1), got {r}")


class LaurentPoly:
    """Finite-support Laurent polynomial, stored as {exponent: coefficient}.

    Zero coefficients are never stored, so the zero polynomial has empty
    support and order ORD_INF.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, Coefficient] | None = None):
        items = sorted((int(k), v) for k, v in (coeffs or {}).items() if v != 0)
        self._coeffs: Dict[int, Coefficient] = dict(items)

    @classmethod
    def monomial(cls, k: int, c: Coefficient = 1) -> "LaurentPoly":
        return cls({k: c})

    @classmethod
    def constant(cls, c: Coefficient) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def coerce(cls, value) -> "LaurentPoly":
        if isinstance(value, LaurentPoly):
            return value
        return cls.constant(value)

    @property
    def coeffs(self) -> Dict[int, Coefficient]:
        return dict(self._coeffs)

    def terms(self) -> List[Tuple[int, Coefficient]]:
        return list(self._coeffs.items())

    def coefficient(self, k: int) -> Coefficient:
        return self._coeffs.get(k, 0)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_monomial(self) -> bool:
        return len(self._coeffs) == 1

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self._coeffs.values())

    @property
    def order(self):
        return next(iter(self._coeffs)) if self._coeffs else ORD_INF

    @property
    def degree(self):
        return next(reversed(self._coeffs)) if self._coeffs else ORD_INF

    def leading(self) -> Coefficient:
        """Coefficient of the lowest-order term."""
        if not self._coeffs:
            raise ZeroDivisionError("zero polynomial has no leading term")
        return self._coeffs[self.order]

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            return other + self
        other = LaurentPoly.coerce(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0) + v
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, TruncatedSeries):
            return (-other) + self
        return self + (-LaurentPoly.coerce(other))

    def __rsub__(self, other):
        return LaurentPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return other * self
        other = LaurentPoly.coerce(other)
        out: Dict[int, Coefficient] = {}
        for i, a in self._coeffs.items():
            for j, b in other._coeffs.items():
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            if not self.is_monomial():
                raise ValueError("negative powers exist only for monomials")
            (e, c), = self._coeffs.items()
            return LaurentPoly({e * k: coefficient_inverse(c) ** (-k)})
        result = LaurentPoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            try:
                other = LaurentPoly.coerce(other)
            except TypeError:
                return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(tuple(self._coeffs.items()))

    def __repr__(self) -> str:
        if not self._coeffs:
            return "LaurentPoly(0)"
        return "LaurentPoly(" + " + ".join(f"({c})*t^{k}" for k, c in self._coeffs.items()) + ")"

    def evaluate(self, t0) -> complex:
        if t0 == 0:
            if self._coeffs and self.order < 0:
                from .errors import ZeroParameter
                raise ZeroParameter("pole at t = 0")
            return complex(self._coeffs.get(0, 0))
        t0 = complex(t0)
        return sum((complex(c) * t0 ** k for k, c in self._coeffs.items()), 0j)

    __call__ = evaluate

    def evaluate_exact(self, t0):
        """Evaluate at an exact nonzero parameter (int, Fraction or ComplexRational)."""
        if isinstance(t0, int):
            t0 = Fraction(t0)
        total = 0
        for k, c in self._coeffs.items():
            total = total + c * t0 ** k
        return total

    def substitute_power(self, m: int) -> "LaurentPoly":
        """The polynomial f(s^m)."""
        return LaurentPoly({k * m: c for k, c in self._coeffs.items()})

    def numeric(self) -> "LaurentPoly":
        return LaurentPoly({k: complex(c) for k, c in self._coeffs.items()})

    def t_adic_norm(self, r):
        return t_adic_norm(self, r)

    def hybrid_norm(self, r):
        return hybrid_norm(self, r)

    def to_json(self, exact: bool = False) -> list:
        """[exponent, re, im] triples, or 5-element exact rows."""
        rows = []
        for k, c in self._coeffs.items():
            if exact:
                if not is_exact(c):
                    raise ValueError("exact serialization needs exact coefficients")
                cr = c if isinstance(c, ComplexRational) else ComplexRational(c)
                rows.append([k, cr.re.numerator, cr.re.denominator, cr.im.numerator, cr.im.denominator])
            else:
                z = complex(c)
                rows.append([k, z.real, z.imag])
        return rows

    @classmethod
    def from_json(cls, rows: Iterable) -> "LaurentPoly":
        coeffs: Dict[int, Coefficient] = {}
        for row in rows:
            if len(row) == 3:
                k, re, im = row
                c = make_coefficient(re, im)
            elif len(row) == 5:
                k, rn, rd, im_n, im_d = row
                c = make_coefficient(Fraction(rn, rd), Fraction(im_n, im_d))
            else:
                raise ValueError(f"bad Laurent term {row!r}")
            if not isinstance(k, int) or isinstance(k, bool):
                raise ValueError(f"exponent must be an integer, got {k!r}")
            coeffs[k] = coeffs.get(k, 0) + c
        return cls(coeffs)


def order(f: LaurentPoly):
    return f.order


def evaluate(f: LaurentPoly, t0) -> complex:
    return f.evaluate(t0)


def t_adic_norm(f: LaurentPoly, r):
    """r ** ord(f), and 0 for the zero polynomial."""
    check_base(r)
    if f.is_zero():
        return 0 * r
    return r ** f.order


def hybrid_norm(f: LaurentPoly, r) -> float:
    """Norm of the Banach ring A_r: sum of max(|a_i|, 1) r^i over the support."""
    check_base(r)
    return sum(max(abs(c), 1) * r ** k for k, c in f.terms())


class TruncatedSeries:
    """Laurent series known modulo t^prec.

    Coefficients of t^k for k >= prec are unknown.  Arithmetic propagates
    the precision honestly, so ``order`` is exact whenever a known
    coefficient is nonzero.
    """

    __slots__ = ("_coeffs", "prec")

    def __init__(self, coeffs: Mapping[int, Coefficient], prec: int):
        self.prec = int(prec)
        items = sorted((int(k), v) for k, v in coeffs.items() if k < self.prec and v != 0)
        self._coeffs: Dict[int, Coefficient] = dict(items)

    @classmethod
    def from_poly(cls, f: LaurentPoly, prec: int) -> "TruncatedSeries":
        return cls(f.coeffs, prec)

    @property
    def coeffs(self) -> Dict[int, Coefficient]:
        return dict(self._coeffs)

    def terms(self) -> List[Tuple[int, Coefficient]]:
        return list(self._coeffs.items())

    def coefficient(self, k: int) -> Coefficient:
        if k >= self.prec:
            raise ValueError(f"coefficient of t^{k} is beyond precision {self.prec}")
        return self._coeffs.get(k, 0)

    def has_known_order(self) -> bool:
        return bool(self._coeffs)

    @property
    def order(self) -> int:
        if not self._coeffs:
            from .errors import InsufficientPrecision
            raise InsufficientPrecision(f"series is O(t^{self.prec}); order unknown")
        return next(iter(self._coeffs))

    def order_lower_bound(self) -> int:
        return next(iter(self._coeffs)) if self._coeffs else self.prec

    @property
    def relative_precision(self) -> int:
        return self.prec - self.order

    def leading(self) -> Coefficient:
        return self._coeffs[self.order]

    def to_poly(self) -> LaurentPoly:
        return LaurentPoly(self._coeffs)

    def truncate(self, prec: int) -> "TruncatedSeries":
        return TruncatedSeries(self._coeffs, min(prec, self.prec))

    def truncate_relative(self, k: int) -> "TruncatedSeries":
        if not self._coeffs:
            return self
        return self.truncate(self.order + k)

    @staticmethod
    def _as_series_parts(other):
        """(coeffs, prec, lower bound) with prec = inf for exact operands."""
        if isinstance(other, TruncatedSeries):
            return other._coeffs, other.prec, other.order_lower_bound()
        other = LaurentPoly.coerce(other)
        lb = other.order if not other.is_zero() else math.inf
        return other._coeffs, math.inf, lb

    def __add__(self, other):
        coeffs, prec, _ = self._as_series_parts(other)
        p = min(self.prec, prec)
        out = dict(self._coeffs)
        for k, v in coeffs.items():
            if k < p:
                out[k] = out.get(k, 0) + v
        return TruncatedSeries(out, p)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries({k: -v for k, v in self._coeffs.items()}, self.prec)

    def __sub__(self, other):
        if isinstance(other, TruncatedSeries):
            return self + (-other)
        return self + (-LaurentPoly.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        coeffs, prec, lb = self._as_series_parts(other)
        if lb == math.inf:
            # product with an exact zero: keep the (sound) self precision
            return TruncatedSeries({}, self.prec)
        p = min(self.prec + lb, prec + self.order_lower_bound())
        out: Dict[int, Coefficient] = {}
        b_items = sorted(coeffs.items())
        for i, a in self._coeffs.items():
            lim = p - i
            for j, b in b_items:
                if j >= lim:
                    break
                out[i + j] = out.get(i + j, 0) + a * b
        return TruncatedSeries(out, int(p))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TruncatedSeries":
        if k < 0:
            raise ValueError("use invert_series for negative powers")
        result = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        if result is None:
            return TruncatedSeries({0: 1}, self.prec - self.order_lower_bound())
        return result

    def agrees_with(self, other, tol: float = 0.0) -> bool:
        """Equality of all coefficients both operands know.

        With ``tol`` > 0 the comparison is relative, for float coefficients.
        """
        coeffs, prec, _ = self._as_series_parts(other)
        p = min(self.prec, prec)
        keys = {k for k in self._coeffs if k < p} | {k for k in coeffs if k < p}
        for k in keys:
            u, v = self._coeffs.get(k, 0), coeffs.get(k, 0)
            if tol == 0.0:
                if u != v:
                    return False
            elif abs(complex(u) - complex(v)) > tol * max(1.0, abs(complex(u)), abs(complex(v))):
                return False
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.prec == other.prec and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.prec, tuple(self._coeffs.items())))

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*t^{k}" for k, c in self._coeffs.items()) or "0"
        return f"TruncatedSeries({body} + O(t^{self.prec}))"


def invert_series(f, prec: int) -> TruncatedSeries:
    """Inverse of f to relative precision ``prec``.

    With m = ord(f) the result is known modulo t^(prec - m), which gives
    f * g = 1 + O(t^prec).  A series argument caps ``prec`` at its own
    relative precision.
    """
    if isinstance(f, TruncatedSeries):
        if not f.has_known_order():
            from .errors import InsufficientPrecision
            raise InsufficientPrecision("cannot invert a series of unknown order")
        coeffs = f.coeffs
        prec = min(prec, f.relative_precision)
    else:
        f = LaurentPoly.coerce(f)
        if f.is_zero():
            raise ZeroDivisionError("invert_series of the zero polynomial")
        coeffs = f.coeffs
    m = min(coeffs)
    inv_lead = coefficient_inverse(coeffs[m])
    shifted = {k - m: c for k, c in coeffs.items() if 0 < k - m < prec}
    g: List[Coefficient] = [inv_lead]
    for j in range(1, prec):
        acc = 0
        for i, c in shifted.items():
            if i <= j:
                acc = acc + c * g[j - i]
        g.append(-inv_lead * acc)
    return TruncatedSeries({j - m: c for j, c in enumerate(g)}, prec - m)


def series_root(f, k: int, prec: int) -> TruncatedSeries:
    """A k-th root of f to relative precision ``prec``.

    Needs ord(f) divisible by k.  The leading coefficient's root is exact
    for rational perfect powers and a principal complex root otherwise;
    the unit part is expanded with the binomial series.
    """
    if isinstance(f, LaurentPoly):
        f = TruncatedSeries.from_poly(f, f.order + prec)
    m = f.order
    if m % k:
        raise ValueError(f"order {m} is not divisible by {k}")
    lead = f.leading()
    root_lead = exact_root(lead, k)
    inv_lead = coefficient_inverse(lead)
    unit_minus_one = TruncatedSeries(
        {e - m: c * inv_lead for e, c in f.terms() if e > m}, min(prec, f.relative_precision))
    total = TruncatedSeries({0: 1}, unit_minus_one.prec)
    power = TruncatedSeries({0: 1}, unit_minus_one.prec)
    binom = Fraction(1)
    expo = Fraction(1, k)
    for j in range(1, unit_minus_one.prec):
        power = power * unit_minus_one
        if not power.terms():
            break
        binom = binom * (expo - (j - 1)) / j
        total = total + power * binom
    shift = m // k
    return TruncatedSeries({e + shift: c * root_lead for e, c in total.terms()}, total.prec + shift)


def exact_root(c, k: int):
    """k-th root of a coefficient: exact when c is a rational perfect power."""
    if k == 1:
        return c
    if isinstance(c, (int, Fraction)) and c > 0:
        c = Fraction(c)
        num = _int_root(c.numerator, k)
        den = _int_root(c.denominator, k)
        if num is not None and den is not None:
            return Fraction(num, den)
    return complex(c) ** (1.0 / k)


def _int_root(n: int, k: int):
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None
