"""Complex Hénon maps at a fixed parameter: filtration, escape times and
Green functions with certified truncation bounds.

Norms are sup norms, ||(x, y)|| = max(|x|, |y|).  Once a forward orbit enters
V+ (a backward orbit V-) it is carried in complex-log coordinates,
L = log x, using the exact identity x' = x^d (1 + rho) with
rho = sum a_i x^-i - a y x^-d.  This keeps long escaping orbits finite
without changing the arithmetic being performed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import IterateOverflow, ParameterTooLarge

CERTIFIED_C = 5.0


class Region(enum.IntEnum):
    W = 0
    VPlus = 1
    VMinus = 2


class GreenStatus(enum.Enum):
    EscapedPlus = "EscapedPlus"
    EscapedMinus = "EscapedMinus"
    BoundedToBudget = "BoundedToBudget"


STATUS_CODES = {0: GreenStatus.BoundedToBudget, 1: GreenStatus.EscapedPlus, 2: GreenStatus.EscapedMinus}


def contraction_delta(c: float, d: int) -> float:
    """(c^d + c^2 - c - 1) / (c^(d+1) - c^d)."""
    return (c ** d + c ** 2 - c - 1) / (c ** (d + 1) - c ** d)


@dataclass(frozen=True)
class ComplexHenon:
    """(x, y) -> (p(x) - a y, x) with p(x) = x^d + a_1 x^(d-1) + ... + a_d."""

    d: int
    coeffs: Tuple[complex, ...]
    a: complex
    c: float = CERTIFIED_C
    t0: Optional[complex] = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(v) for v in self.coeffs))
        object.__setattr__(self, "a", complex(self.a))
        if len(self.coeffs) != self.d:
            raise ValueError(f"expected {self.d} coefficients, got {len(self.coeffs)}")
        if self.a == 0:
            raise ValueError("a must be nonzero")

    @property
    def R(self) -> float:
        m = abs(self.a)
        return self.c * max([1.0, m, 1.0 / m, m ** -2] + [abs(v) for v in self.coeffs])

    @property
    def delta(self) -> float:
        return contraction_delta(self.c, self.d)

    def certified(self) -> "ComplexHenon":
        """Same map with the filtration constant raised to at least 5."""
        return self if self.c >= CERTIFIED_C else replace(self, c=CERTIFIED_C)

    def p(self, x):
        v = 1.0
        for ai in self.coeffs:
            v = v * x + ai
        return v

    def dp(self, x):
        d = self.d
        v = d * 1.0
        for i, ai in enumerate(self.coeffs[:-1], start=1):
            v = v * x + (d - i) * ai
        return v

    def apply(self, x, y):
        return self.p(x) - self.a * y, x

    def apply_inverse(self, x, y):
        return y, (self.p(y) - x) / self.a

    def jacobian(self, x) -> np.ndarray:
        """Derivative of (p(x) - a y, x): [[p'(x), -a], [1, 0]]."""
        return np.array([[self.dp(x), -self.a], [1.0, 0.0]], dtype=complex)

    def classify(self, x, y) -> Region:
        ax, ay, R = abs(x), abs(y), self.R
        if ax >= ay and ax >= R:
            return Region.VPlus
        if ay >= R:
            return Region.VMinus
        return Region.W

    def classify_array(self, x, y) -> np.ndarray:
        ax, ay, R = np.abs(x), np.abs(y), self.R
        out = np.zeros(np.shape(ax), dtype=np.int8)
        plus = (ax >= ay) & (ax >= R)
        out[plus] = Region.VPlus
        out[~plus & (ay >= R)] = Region.VMinus
        return out

    def fixed_points(self) -> np.ndarray:
        """Roots of p(x) - (1 + a) x, the x = y coordinate of fixed points."""
        poly = np.array([1.0] + list(self.coeffs), dtype=complex)
        poly[-2] -= 1.0 + self.a
        return np.roots(poly)


def _sup_log_norm(x, y):
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(np.abs(x), np.abs(y)))


class _Orbit:
    """Vectorized orbit of many points in one direction.

    Raw coordinates are used until a point enters V+ (forward) or V-
    (backward); from then on the point is carried in complex-log form.
    """

    def __init__(self, H: ComplexHenon, x, y, sign: int):
        self.H = H
        self.sign = sign
        self.x = np.array(x, dtype=complex, copy=True).ravel()
        self.y = np.array(y, dtype=complex, copy=True).ravel()
        n = self.x.size
        self.Lx = np.zeros(n, dtype=complex)
        self.Ly = np.zeros(n, dtype=complex)
        self.inlog = np.zeros(n, dtype=bool)
        self.loga = complex(np.log(H.a))
        self._maybe_switch(np.ones(n, dtype=bool))

    @classmethod
    def from_logs(cls, H: ComplexHenon, Lx, Ly, sign: int) -> "_Orbit":
        """Orbit whose points are all already in the escape region, in log form."""
        orbit = cls(H, np.zeros(0), np.zeros(0), sign)
        orbit.Lx = np.array(Lx, dtype=complex)
        orbit.Ly = np.array(Ly, dtype=complex)
        orbit.x = np.zeros(orbit.Lx.size, dtype=complex)
        orbit.y = np.zeros(orbit.Lx.size, dtype=complex)
        orbit.inlog = np.ones(orbit.Lx.size, dtype=bool)
        return orbit

    def escaped_region(self) -> int:
        return Region.VPlus if self.sign > 0 else Region.VMinus

    def in_escape_region(self) -> np.ndarray:
        raw = self.H.classify_array(self.x, self.y) == self.escaped_region()
        return self.inlog | raw

    def _maybe_switch(self, mask):
        cand = mask & ~self.inlog
        cand[cand] = self.H.classify_array(self.x[cand], self.y[cand]) == self.escaped_region()
        if cand.any():
            with np.errstate(divide="ignore"):
                self.Lx[cand] = np.log(self.x[cand])
                self.Ly[cand] = np.log(self.y[cand])
            self.inlog |= cand

    def step(self, mask=None):
        H = self.H
        if mask is None:
            mask = np.ones(self.x.size, dtype=bool)
        raw = mask & ~self.inlog
        if raw.any():
            if self.sign > 0:
                nx, ny = H.apply(self.x[raw], self.y[raw])
            else:
                nx, ny = H.apply_inverse(self.x[raw], self.y[raw])
            self.x[raw], self.y[raw] = nx, ny
        lg = mask & self.inlog
        if lg.any():
            d = H.d
            if self.sign > 0:
                L, M = self.Lx[lg], self.Ly[lg]
            else:
                L, M = self.Ly[lg], self.Lx[lg]
            rho = np.zeros(L.shape, dtype=complex)
            for i, ai in enumerate(H.coeffs, start=1):
                if ai != 0:
                    rho += ai * np.exp(-i * L)
            with np.errstate(over="ignore", invalid="ignore"):
                if self.sign > 0:
                    rho -= H.a * np.exp(M - d * L)
                    newL = d * L + np.log1p(rho)
                else:
                    rho -= np.exp(M - d * L)
                    newL = d * L - self.loga + np.log1p(rho)
            if self.sign > 0:
                self.Lx[lg], self.Ly[lg] = newL, L
            else:
                self.Lx[lg], self.Ly[lg] = L, newL
        self._maybe_switch(raw)

    def log_norm(self) -> np.ndarray:
        out = _sup_log_norm(self.x, self.y)
        lg = self.inlog
        out[lg] = np.maximum(self.Lx[lg].real, self.Ly[lg].real)
        return out

    def finite(self) -> np.ndarray:
        ok = np.isfinite(self.x) & np.isfinite(self.y)
        lg = self.inlog
        ok[lg] = np.isfinite(self.Lx[lg].real) | np.isfinite(self.Ly[lg].real)
        return ok


def escape_time(H: ComplexHenon, z, budget: int, sign: int = 1) -> Optional[int]:
    """Smallest n <= budget with H^(sign n)(z) in V+ (sign=1) or V- (sign=-1)."""
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    x, y = complex(z[0]), complex(z[1])
    target = Region.VPlus if sign > 0 else Region.VMinus
    for n in range(budget + 1):
        if H.classify(x, y) == target:
            return n
        if n == budget:
            break
        x, y = H.apply(x, y) if sign > 0 else H.apply_inverse(x, y)
        if not (math.isfinite(abs(x)) and math.isfinite(abs(y))):
            raise IterateOverflow("orbit left the floating range before entering the escape region")
    return None


def escape_time_plus(H: ComplexHenon, z, budget: int) -> Optional[int]:
    return escape_time(H, z, budget, 1)


def escape_time_minus(H: ComplexHenon, z, budget: int) -> Optional[int]:
    return escape_time(H, z, budget, -1)


def log_norm_after(H: ComplexHenon, x, y, n: int, sign: int) -> np.ndarray:
    """log ||H^(sign n)(z)|| for arrays of points."""
    orbit = _Orbit(H.certified() if H.c < CERTIFIED_C else H, x, y, sign)
    for _ in range(n):
        orbit.step()
    out = orbit.log_norm()
    if not np.all(orbit.finite()):
        raise IterateOverflow("orbit left the floating range outside the escape regions")
    return out.reshape(np.shape(x))


def green_n_array(H: ComplexHenon, x, y, n: int, sign: int) -> np.ndarray:
    """(1/d^n) log+ ||H^(+-n)(z)||; sign=0 gives the max of both directions."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if sign == 0:
        return np.maximum(green_n_array(H, x, y, n, 1), green_n_array(H, x, y, n, -1))
    return np.maximum(log_norm_after(H, x, y, n, sign), 0.0) / float(H.d) ** n


def green_n(H: ComplexHenon, z, n: int, sign: int) -> float:
    x = np.array([complex(z[0])])
    y = np.array([complex(z[1])])
    return float(green_n_array(H, x, y, n, sign)[0])


@dataclass(frozen=True)
class GreenEstimate:
    value: float
    n_used: int
    err_bound: float
    status: GreenStatus
    escape_plus: Optional[int] = None
    escape_minus: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "err_bound": self.err_bound,
            "n_used": self.n_used,
            "status": self.status.value,
            "escape_plus": self.escape_plus,
            "escape_minus": self.escape_minus,
        }


@dataclass
class GreenArrays:
    """Vectorized counterpart of GreenEstimate (escape = -1 when none)."""

    value: np.ndarray
    err_bound: np.ndarray
    status: np.ndarray
    n_used: np.ndarray
    escape: np.ndarray


def tail_constants(H: ComplexHenon, sign: int) -> Tuple[float, float]:
    """(escaped tail, bounded-case additive term) for the given direction.

    On V+ the per-step log-ratio log ||H w|| - d log ||w|| lies in
    [log(1-delta), log(1+delta)]; on V- the same interval shifted by
    -log|a|.  The tail of G - G_k after escape is at most the largest
    modulus of that interval divided by (d-1), times d^-k.
    """
    d, delta = H.d, H.delta
    lo, hi = math.log1p(-delta), math.log1p(delta)
    bounded = -lo
    if sign < 0:
        shift = -math.log(abs(H.a))
        lo, hi = lo + shift, hi + shift
        bounded += max(0.0, shift)
    return max(abs(lo), abs(hi)) / (d - 1), bounded / (d - 1)


def default_budget(d: int, scale: float = 1.0) -> int:
    """10 * ceil(log_d(53 + |log2 scale|))."""
    s = abs(math.log2(scale)) if scale > 0 else 0.0
    return 10 * math.ceil(math.log(53 + s) / math.log(d))


def green_directional_array(H: ComplexHenon, x, y, sign: int, target_err: Optional[float] = None,
                            budget: Optional[int] = None, extra_max: int = 200) -> GreenArrays:
    """Certified G+ (sign=1) or G- (sign=-1) for arrays of points."""
    H = H.certified()
    shape = np.shape(x)
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    d = H.d
    if budget is None:
        scale = float(np.max(np.maximum(np.abs(x), np.abs(y)), initial=1.0))
        budget = default_budget(d, max(scale, H.R))
    tail, bounded_term = tail_constants(H, sign)

    orbit = _Orbit(H, x, y, sign)
    npts = x.size
    escape = np.full(npts, -1, dtype=np.int64)
    esc_now = orbit.in_escape_region()
    escape[esc_now] = 0
    state_Lx = np.zeros(npts, dtype=complex)
    state_Ly = np.zeros(npts, dtype=complex)
    state_Lx[esc_now] = orbit.Lx[esc_now]
    state_Ly[esc_now] = orbit.Ly[esc_now]
    for k in range(1, budget + 1):
        pending = escape < 0
        if not pending.any():
            break
        orbit.step(pending)
        now = pending & orbit.inlog
        escape[now] = k
        state_Lx[now] = orbit.Lx[now]
        state_Ly[now] = orbit.Ly[now]
        if not np.all(np.isfinite(orbit.x[pending & ~orbit.inlog])):
            raise IterateOverflow("orbit overflowed outside the escape regions")

    value = np.zeros(npts)
    err = np.zeros(npts)
    n_used = np.zeros(npts, dtype=np.int64)
    status = np.zeros(npts, dtype=np.int8)

    bounded = escape < 0
    if bounded.any():
        logM = np.maximum(_sup_log_norm(orbit.x[bounded], orbit.y[bounded]), math.log(H.R))
        err[bounded] = (logM + bounded_term) / float(d) ** budget
        n_used[bounded] = budget

    esc = ~bounded
    if esc.any():
        n_esc = escape[esc]
        scale_esc = np.power(float(d), -n_esc.astype(float))
        if target_err is None:
            extra = np.zeros(n_esc.shape, dtype=np.int64)
        else:
            need = tail * scale_esc / target_err
            with np.errstate(divide="ignore"):
                extra = np.ceil(np.log(np.maximum(need, 1.0)) / math.log(d)).astype(np.int64)
            extra = np.minimum(extra, extra_max)
        kmax = int(extra.max(initial=0))
        sub = _Orbit.from_logs(H, state_Lx[esc], state_Ly[esc], sign)
        lognorm = np.maximum(sub.Lx.real, sub.Ly.real)
        for k in range(1, kmax + 1):
            sub.step()
            upd = extra >= k
            lognorm[upd] = np.maximum(sub.Lx.real, sub.Ly.real)[upd]
        g_w = np.maximum(lognorm, 0.0) * np.power(float(d), -extra.astype(float))
        value[esc] = g_w * scale_esc
        err[esc] = tail * np.power(float(d), -extra.astype(float)) * scale_esc
        n_used[esc] = n_esc + extra
        status[esc] = 1 if sign > 0 else 2

    return GreenArrays(value.reshape(shape), err.reshape(shape), status.reshape(shape),
                       n_used.reshape(shape), escape.reshape(shape))


def green_max_array(H: ComplexHenon, x, y, target_err: Optional[float] = None,
                    budget: Optional[int] = None) -> GreenArrays:
    """Certified G = max(G+, G-); the error bound is the max of the two."""
    plus = green_directional_array(H, x, y, 1, target_err, budget)
    minus = green_directional_array(H, x, y, -1, target_err, budget)
    take_minus = minus.value > plus.value
    value = np.where(take_minus, minus.value, plus.value)
    err = np.maximum(plus.err_bound, minus.err_bound)
    status = np.where(take_minus, minus.status, plus.status)
    both_bounded = (plus.status == 0) & (minus.status == 0)
    status = np.where(both_bounded, 0, status)
    n_used = np.maximum(plus.n_used, minus.n_used)
    escape = np.where(take_minus, minus.escape, plus.escape)
    return GreenArrays(value, err, status, n_used, escape), plus, minus


def green_certified(H: ComplexHenon, z, target_err: Optional[float] = None,
                    n_max: Optional[int] = None, which: str = "max") -> GreenEstimate:
    """Certified Green value at one point.

    ``which`` is "plus", "minus" or "max".  ``n_max`` is the iteration budget
    for the bounded-orbit classification; ``target_err`` controls how far
    escaping orbits are followed.
    """
    x = np.array([complex(z[0])])
    y = np.array([complex(z[1])])
    if which == "plus":
        g = green_directional_array(H, x, y, 1, target_err, n_max)
        esc_p, esc_m = int(g.escape[0]), None
    elif which == "minus":
        g = green_directional_array(H, x, y, -1, target_err, n_max)
        esc_p, esc_m = None, int(g.escape[0])
    elif which == "max":
        g, gp, gm = green_max_array(H, x, y, target_err, n_max)
        esc_p, esc_m = int(gp.escape[0]), int(gm.escape[0])
    else:
        raise ValueError(f"unknown branch {which!r}")
    fix = lambda e: None if e is None or e < 0 else e
    return GreenEstimate(
        value=float(g.value[0]),
        n_used=int(g.n_used[0]),
        err_bound=float(g.err_bound[0]),
        status=STATUS_CODES[int(g.status[0])],
        escape_plus=fix(esc_p),
        escape_minus=fix(esc_m),
    )


def uniformity_constants_at(H: ComplexHenon, t0) -> Tuple[float, float]:
    """Per-parameter constants alpha(t0), beta(t0)."""
    L = math.log(1.0 / abs(t0)) if t0 != 0 else math.inf
    if not L > 0:
        raise ParameterTooLarge(f"log|t|^-1 = {L} is not positive")
    H = H.certified()
    d = H.d
    alpha = d * (math.log(H.R) + math.log(1.0 / (1.0 - H.delta)) / (d - 1)) / L
    beta = d * max(0.0, -math.log(abs(H.a))) / ((d - 1) * L)
    return alpha, beta


def uniformity_constants(family, t0s) -> Tuple[float, float]:
    """Suprema of alpha(t0), beta(t0) over the given parameter values."""
    if np.ndim(t0s) == 0:
        t0s = [t0s]
    alphas, betas = [], []
    for t0 in t0s:
        if abs(t0) >= 1:
            raise ParameterTooLarge(f"|t0| = {abs(t0)} must be < 1")
        al, be = uniformity_constants_at(family.at(t0), t0)
        alphas.append(al)
        betas.append(be)
    return max(alphas), max(betas)
