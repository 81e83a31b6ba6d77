"""Grid approximation of the Monge-Ampère measure of G = max(G+, G-) and
Lyapunov exponents of the derivative cocycle.

With dd^c = 2i ddbar and mu = (dd^c G)^2 / (4 pi^2), a smooth function u has
mu = (8 / pi^2) det(u_{j kbar}) dV, where dV is Lebesgue measure on R^4.
The same formula holds in any holomorphic chart, which is what the
log-polar grid uses: nodes are placed in w = (log x, log y) and the density
is computed for u(exp w1, exp w2).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .complex_dynamics import ComplexHenon, green_max_array
from .errors import NonFiniteField, OrbitEscaped

MA_CONSTANT = 8.0 / math.pi ** 2
CARTESIAN = "cartesian"
LOGPOLAR = "logpolar"


@dataclass(frozen=True)
class GridSpec:
    """Node layout for the measure computation.

    ``box`` holds four (lo, hi) ranges.  For a Cartesian grid they bound
    (Re x, Im x, Re y, Im y); for a log-polar grid they bound
    (log|x|, arg x, log|y|, arg y) and the angular ranges are periodic.
    """

    box: Tuple[Tuple[float, float], ...]
    n_per_axis: int = 24
    smoothing_eps: float = 0.5
    kind: str = CARTESIAN

    def __post_init__(self):
        if len(self.box) != 4 or any(not hi > lo for lo, hi in self.box):
            raise ValueError("box needs four increasing ranges")
        if self.n_per_axis < 8:
            raise ValueError("n_per_axis must be at least 8")
        if not self.smoothing_eps > 0:
            raise ValueError("smoothing_eps must be positive")
        if self.kind not in (CARTESIAN, LOGPOLAR):
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @property
    def periodic(self) -> Tuple[bool, ...]:
        if self.kind == LOGPOLAR:
            return (False, True, False, True)
        return (False,) * 4

    def spacing(self) -> Tuple[float, ...]:
        out = []
        for (lo, hi), per in zip(self.box, self.periodic):
            out.append((hi - lo) / (self.n_per_axis if per else self.n_per_axis - 1))
        return tuple(out)

    def axis_nodes(self, pad: int = 0):
        out = []
        for (lo, hi), per, h in zip(self.box, self.periodic, self.spacing()):
            if per:
                out.append(lo + h * (np.arange(self.n_per_axis) + 0.5))
            else:
                out.append(lo + h * np.arange(-pad, self.n_per_axis + pad))
        return out

    def padding(self) -> int:
        h = min(hh for hh, per in zip(self.spacing(), self.periodic) if not per)
        return int(math.ceil(4.0 * self.smoothing_eps / h)) + 1

    def to_points(self, axes):
        """Complex (x, y) arrays for the meshgrid of the given axis nodes."""
        a, b, c, e = np.meshgrid(*axes, indexing="ij")
        if self.kind == LOGPOLAR:
            return np.exp(a + 1j * b), np.exp(c + 1j * e)
        return a + 1j * b, c + 1j * e

    @classmethod
    def filtration_box(cls, H: ComplexHenon, n_per_axis: int = 24,
                       smoothing_eps: Optional[float] = None) -> "GridSpec":
        """Cartesian grid on [-R-1, R+1]^4, which contains W and hence supp mu."""
        s = H.R + 1.0
        h = 2 * s / (n_per_axis - 1)
        return cls(((-s, s),) * 4, n_per_axis, smoothing_eps or 2.0 * h, CARTESIAN)

    @classmethod
    def log_polar(cls, log_x: Tuple[float, float], log_y: Tuple[float, float],
                  n_per_axis: int = 24, smoothing_eps: Optional[float] = None) -> "GridSpec":
        box = (tuple(log_x), (-math.pi, math.pi), tuple(log_y), (-math.pi, math.pi))
        h = max((log_x[1] - log_x[0]), (log_y[1] - log_y[0])) / (n_per_axis - 1)
        return cls(box, n_per_axis, smoothing_eps or 1.5 * max(h, 2 * math.pi / n_per_axis), LOGPOLAR)


@dataclass
class GreenGrid:
    spec: GridSpec
    values: np.ndarray
    err_bound: float
    pad: int


def build_green_grid(H: ComplexHenon, spec: GridSpec, budget: Optional[int] = None) -> GreenGrid:
    """Certified G on the padded node set, with error at most eps / 10."""
    pad = spec.padding()
    axes = spec.axis_nodes(pad)
    x, y = spec.to_points(axes)
    target = spec.smoothing_eps / 10.0
    combined, _, _ = green_max_array(H, x.ravel(), y.ravel(), target_err=target, budget=budget)
    values = combined.value.reshape(x.shape)
    if not np.all(np.isfinite(values)):
        raise NonFiniteField("Green function is not finite at every node")
    return GreenGrid(spec, values, float(np.max(combined.err_bound)), pad)


@dataclass
class GridMeasure:
    """Cells with nonnegative weights; centers are (Re x, Im x, Re y, Im y)."""

    centers: np.ndarray
    weights: np.ndarray
    total_mass: float
    clipped_mass: float
    spec: Optional[GridSpec] = None

    @property
    def x(self) -> np.ndarray:
        return self.centers[:, 0] + 1j * self.centers[:, 1]

    @property
    def y(self) -> np.ndarray:
        return self.centers[:, 2] + 1j * self.centers[:, 3]

    def summary(self) -> dict:
        out = {"total_mass": self.total_mass, "clipped_mass": self.clipped_mass,
               "cells": int(self.weights.size)}
        if self.spec is not None:
            out.update(resolution=self.spec.n_per_axis, eps=self.spec.smoothing_eps, kind=self.spec.kind)
        return out

    def write_csv(self, path) -> None:
        keep = self.weights > 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_x", "im_x", "re_y", "im_y", "weight"])
            for row, wt in zip(self.centers[keep], self.weights[keep]):
                w.writerow([f"{v:.17g}" for v in row] + [f"{wt:.17g}"])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _second_differences(u: np.ndarray, h: Sequence[float]):
    """Centered pure and mixed second differences on every axis (periodic
    wrap-around; non-periodic edges are cropped by the caller)."""
    def shift(a, axis, k):
        return np.roll(a, -k, axis=axis)

    pure = [(shift(u, i, 1) - 2 * u + shift(u, i, -1)) / h[i] ** 2 for i in range(4)]

    def mixed(i, j):
        return (shift(shift(u, i, 1), j, 1) - shift(shift(u, i, 1), j, -1)
                - shift(shift(u, i, -1), j, 1) + shift(shift(u, i, -1), j, -1)) / (4 * h[i] * h[j])
    return pure, mixed


def complex_hessian_det(u: np.ndarray, h: Sequence[float]) -> np.ndarray:
    """det of (d^2 u / dz_j dzbar_k) in coordinates (Re z1, Im z1, Re z2, Im z2)."""
    pure, mixed = _second_differences(u, h)
    u11 = (pure[0] + pure[1]) / 4
    u22 = (pure[2] + pure[3]) / 4
    re12 = (mixed(0, 2) + mixed(1, 3)) / 4
    im12 = (mixed(0, 3) - mixed(1, 2)) / 4
    return u11 * u22 - (re12 ** 2 + im12 ** 2)


def ma_measure_from_values(values: np.ndarray, spec: GridSpec, pad: int) -> GridMeasure:
    """Mollify, difference and weight a field sampled on the padded nodes."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteField("field has non-finite nodes")
    h = spec.spacing()
    sigma = [spec.smoothing_eps / hh for hh in h]
    modes = ["wrap" if per else "nearest" for per in spec.periodic]
    smooth = ndimage.gaussian_filter(values, sigma=sigma, mode=modes, truncate=4.0)
    det = complex_hessian_det(smooth, h)
    crop = tuple(slice(None) if per else slice(pad, pad + spec.n_per_axis) for per in spec.periodic)
    density = MA_CONSTANT * det[crop]
    vol = float(np.prod(h))
    raw = density * vol
    weights = np.clip(raw, 0.0, None)
    clipped = float(abs(raw[raw < 0].sum()))
    axes = spec.axis_nodes(0)
    x, y = spec.to_points(axes)
    centers = np.stack([x.real.ravel(), x.imag.ravel(), y.real.ravel(), y.imag.ravel()], axis=1)
    return GridMeasure(centers, weights.ravel(), float(weights.sum()), clipped, spec)


def ma_measure(field: GreenGrid) -> GridMeasure:
    return ma_measure_from_values(field.values, field.spec, field.pad)


def sample_field(func: Callable, spec: GridSpec) -> Tuple[np.ndarray, int]:
    """Evaluate func(x, y) on the padded nodes of spec (for model fields)."""
    pad = spec.padding()
    x, y = spec.to_points(spec.axis_nodes(pad))
    return func(x, y), pad


def toric_green(x, y) -> np.ndarray:
    """log+ max(|x|, |y|), whose Monge-Ampère measure is the unit-torus probability measure."""
    return np.maximum(np.log(np.maximum(np.abs(x), np.abs(y))), 0.0)


def integrate(m: GridMeasure, f: Callable) -> float:
    """Normalized pairing sum f(center) w / total mass; f takes complex (x, y)."""
    vals = np.asarray(f(m.x, m.y), dtype=float)
    keep = m.weights > 0
    if not np.all(np.isfinite(vals[keep])):
        raise NonFiniteField("observable is not finite on the support")
    return float(np.dot(vals[keep], m.weights[keep]) / m.total_mass)


@dataclass
class LyapunovResult:
    lambda1: float
    lambda2: float
    n_steps: int
    sum_residual: float
    mode: str = "forward"
    period: int = 0

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "n_steps": self.n_steps,
                "sum_residual": self.sum_residual, "mode": self.mode, "period": self.period}


def _qr_accumulate(H: ComplexHenon, xs: np.ndarray) -> Tuple[float, float]:
    """Sum of log|R_11| and log|R_22| over the Jacobians at xs.

    Each 2x2 step M = DH(x) Q is factored by one Givens rotation on scalars,
    which is backward stable and much cheaper than a LAPACK call per step.
    """
    q00, q01, q10, q11 = 1 + 0j, 0j, 0j, 1 + 0j
    a = complex(H.a)
    s1 = s2 = 0.0
    for x in xs.tolist():
        dp = complex(H.dp(x))
        # M = [[dp, -a], [1, 0]] @ Q
        m00, m01 = dp * q00 - a * q10, dp * q01 - a * q11
        m10, m11 = q00, q01
        r11 = math.hypot(abs(m00), abs(m10))
        r22 = (m00 * m11 - m10 * m01) / r11
        s1 += math.log(r11)
        s2 += math.log(abs(r22))
        u, v = m00 / r11, m10 / r11
        q00, q01, q10, q11 = u, -v.conjugate(), v, u.conjugate()
    return s1, s2


def lyapunov_qr(H: ComplexHenon, start, N: int, bailout: Optional[float] = None,
                transient: int = 0) -> LyapunovResult:
    """Exponents along the forward orbit of start by QR re-orthonormalization."""
    bailout = bailout if bailout is not None else 10.0 * H.R
    x, y = complex(start[0]), complex(start[1])
    xs = np.empty(N, dtype=complex)
    for k in range(transient + N):
        if k >= transient:
            xs[k - transient] = x
        x, y = H.apply(x, y)
        if not (abs(x) <= bailout and abs(y) <= bailout):
            raise OrbitEscaped(f"orbit left the bailout radius at step {k + 1}")
    return _finish(H, xs, "forward", 0)


def _finish(H: ComplexHenon, xs: np.ndarray, mode: str, period: int) -> LyapunovResult:
    s1, s2 = _qr_accumulate(H, xs)
    n = len(xs)
    l1, l2 = sorted((s1 / n, s2 / n), reverse=True)
    return LyapunovResult(l1, l2, n, abs(l1 + l2 - math.log(abs(H.a))), mode, period)


def find_periodic_orbit(H: ComplexHenon, period: int, rng: np.random.Generator,
                        tries: int = 400, tol: float = 1e-12) -> np.ndarray:
    """x-coordinates of a cycle of minimal period ``period``, by Newton on H^k(z) - z."""
    scale = max(1.0, abs(H.a), max((abs(c) for c in H.coeffs), default=1.0) ** (1.0 / H.d))
    with np.errstate(all="ignore"):
        for _ in range(tries):
            z = (rng.normal(size=2) + 1j * rng.normal(size=2)) * scale
            for _ in range(80):
                pts = [z]
                x, y = z
                J = np.eye(2, dtype=complex)
                for _ in range(period):
                    J = H.jacobian(x) @ J
                    x, y = H.apply(x, y)
                    pts.append(np.array([x, y]))
                F = pts[-1] - z
                if not np.all(np.isfinite(F)) or not np.all(np.isfinite(J)):
                    break
                try:
                    step = np.linalg.solve(J - np.eye(2), -F)
                except np.linalg.LinAlgError:
                    break
                z = z + step
                size = max(1.0, float(np.linalg.norm(z)))
                if np.linalg.norm(step) < tol * size:
                    gaps = [np.linalg.norm(pts[k] - pts[0]) for k in range(1, period)]
                    if all(g > 1e-6 * size for g in gaps):
                        return np.array([q[0] for q in pts[:period]])
                    break
    raise OrbitEscaped(f"no orbit of minimal period {period} found")


def lyapunov_cycle(H: ComplexHenon, N: int, period: int = 1,
                   rng: Optional[np.random.Generator] = None) -> LyapunovResult:
    """Exponents along N steps of an exact periodic orbit (repeated cycle).

    Used when typical forward orbits escape: the cycle is a bona fide
    non-escaping orbit, and the sum of its exponents is log|a| like any other.
    """
    rng = rng or np.random.default_rng(0)
    cycle = find_periodic_orbit(H, period, rng)
    xs = np.resize(cycle, N)
    return _finish(H, xs, "cycle", period)


def lyapunov_measure_avg(H: ComplexHenon, m: GridMeasure, n_horizon: int = 1) -> float:
    """mu-average estimate of the top exponent.

    For n_horizon = 1 it averages log of the spectral radius of DH; for
    larger horizons it averages (1/n) log ||DH^n|| along each cell's orbit.
    Cells whose orbit becomes non-finite are dropped and the average renormalized.
    """
    keep = m.weights > 0
    x, y, w = m.x[keep], m.y[keep], m.weights[keep]
    if n_horizon == 1:
        dp = H.dp(x)
        disc = np.sqrt(dp * dp - 4 * H.a + 0j)
        rho = np.maximum(np.abs((dp + disc) / 2), np.abs((dp - disc) / 2))
        vals = np.log(rho)
    else:
        A = np.broadcast_to(np.eye(2, dtype=complex), (x.size, 2, 2)).copy()
        logscale = np.zeros(x.size)
        xx, yy = x.copy(), y.copy()
        with np.errstate(all="ignore"):
            for _ in range(n_horizon):
                J = np.zeros((x.size, 2, 2), dtype=complex)
                J[:, 0, 0] = H.dp(xx)
                J[:, 0, 1] = -H.a
                J[:, 1, 0] = 1.0
                A = J @ A
                s = np.sqrt((np.abs(A) ** 2).sum(axis=(1, 2)))
                logscale += np.log(s)
                A /= s[:, None, None]
                xx, yy = H.apply(xx, yy)
            vals = np.full(x.size, np.nan)
            good = np.isfinite(logscale) & np.all(np.isfinite(A), axis=(1, 2))
            vals[good] = (logscale[good] + np.log(np.linalg.norm(A[good], ord=2, axis=(1, 2)))) / n_horizon
    ok = np.isfinite(vals)
    return float(np.dot(vals[ok], w[ok]) / w[ok].sum())
