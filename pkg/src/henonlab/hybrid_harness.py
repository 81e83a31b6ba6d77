"""Experiments across a degenerating parameter ladder t -> 0.

Complex quantities at parameter t are compared with non-archimedean ones
after the hybrid rescaling: a quantity of size log|t|^-1 is multiplied by
scale_factor(t) = log r / log|t|^-1, so that |t|^u rescales to the number
u * log(1/r) that the t-adic absolute value with base r assigns to t^u.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .canonical import dumps
from .complex_dynamics import ComplexHenon, green_n_array, uniformity_constants_at
from .errors import OrbitEscaped, StructureViolation, TropicalTie
from .family import HenonFamily
from .homogenization import (DEFAULT_SYMBOLIC_BUDGET, HomogeneousDatum, coefficient_growth,
                             homogenize_datum, model_identity_residual)
from .laurent import LaurentPoly, check_base
from .measure import (GridSpec, build_green_grid, find_periodic_orbit, integrate, lyapunov_cycle,
                      lyapunov_qr, ma_measure)
from .na_dynamics import ValPoint, tropical_core, tropical_step

UNIFORMITY_HEADER = ("t_abs", "n", "sup_gap", "ratio", "bound", "pass")


@dataclass(frozen=True)
class HybridBase:
    r: float
    t_samples: Tuple[complex, ...]

    def __post_init__(self):
        check_base(self.r)
        ts = tuple(complex(t) for t in self.t_samples)
        object.__setattr__(self, "t_samples", ts)
        if not ts:
            raise ValueError("need at least one parameter sample")
        mods = [abs(t) for t in ts]
        if any(not 0 < m <= self.r for m in mods):
            raise ValueError("samples must satisfy 0 < |t| <= r")
        if any(b >= a for a, b in zip(mods, mods[1:])):
            raise ValueError("|t| must be strictly decreasing")

    @classmethod
    def ladder(cls, r: float = 0.5, exponents: Sequence[int] = (1, 2, 4, 8, 16)) -> "HybridBase":
        return cls(r, tuple(complex(r ** k) for k in exponents))


def tau_norm(f: LaurentPoly, t, r: float) -> float:
    """|f(t)|^(log r / log|t|) for t != 0, and r^ord(f) at t = 0."""
    check_base(r)
    f = LaurentPoly.coerce(f)
    if t == 0:
        return 0.0 if f.is_zero() else r ** f.order
    t = complex(t)
    if abs(t) > r:
        raise ValueError("need |t| <= r")
    val = abs(f(t))
    if val == 0:
        return 0.0
    return math.exp(math.log(val) * math.log(r) / math.log(abs(t)))


def scale_factor(t, r: float) -> float:
    """log r / log|t|^-1 (negative)."""
    t = abs(complex(t))
    if not 0 < t < 1:
        raise ValueError("need 0 < |t| < 1")
    return math.log(r) / math.log(1.0 / t)


@dataclass
class DegenerationReport:
    """Per-(t, n) table plus summary values, flags and recorded violations."""

    experiment: str
    header: Tuple[str, ...]
    rows: List[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    violations: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "rows": self.rows, "summary": self.summary,
                "violations": self.violations, "ok": self.ok}

    def write(self, out_dir, stem: Optional[str] = None) -> List[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.experiment
        paths = [out / f"{stem}.csv", out / f"{stem}.json", out / f"{stem}.dat"]
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header)
            for row in self.rows:
                w.writerow([_fmt(row.get(k)) for k in self.header])
        paths[1].write_text(dumps(self.to_dict()) + "\n")
        with open(paths[2], "w") as fh:
            fh.write("# " + " ".join(self.header) + "\n")
            for row in self.rows:
                fh.write(" ".join(_fmt(row.get(k)) for k in self.header) + "\n")
        return paths


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sample_points(H: ComplexHenon, size: int, rng: np.random.Generator,
                  reach: float = 4.0, orbit_steps: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """Sample for sup estimates of Green-function gaps.

    Base points have log-uniform moduli in [1/(4R), R^reach] and uniform
    arguments.  Their images under H^+-j, j <= orbit_steps, are added: these
    accumulate near K- and K+ respectively, where orbits spend many steps
    inside W and the gap between G and G_n is largest.
    """
    lo, hi = -math.log(4 * H.R), reach * math.log(H.R)
    base = max(size // (1 + 2 * orbit_steps), 1)
    mods = np.exp(rng.uniform(lo, hi, size=(2, base)))
    args = rng.uniform(0, 2 * math.pi, size=(2, base))
    z = mods * np.exp(1j * args)
    xs, ys = [z[0]], [z[1]]
    limit = H.R ** reach
    with np.errstate(all="ignore"):
        for step in (H.apply, H.apply_inverse):
            x, y = z[0], z[1]
            for _ in range(orbit_steps):
                x, y = step(x, y)
                ok = np.isfinite(x) & np.isfinite(y) & (np.abs(x) <= limit) & (np.abs(y) <= limit)
                xs.append(x[ok])
                ys.append(y[ok])
    return np.concatenate(xs), np.concatenate(ys)


def periodic_cycles(H: ComplexHenon, rng: np.random.Generator, periods: Sequence[int] = (2, 3),
                    tries: int = 6) -> List[np.ndarray]:
    """x-coordinates of cycles: every fixed point plus a few cycles of each period.

    Cycles lie in K, so G vanishes on them while G_n sees the full size of the
    orbit.  Random samples almost never land this close to K.
    """
    cycles = [np.array([x]) for x in H.fixed_points()]
    for period in periods:
        for _ in range(tries):
            try:
                cycles.append(find_periodic_orbit(H, period, rng, tries=50))
            except OrbitEscaped:
                break
    return cycles


def cycle_green_n(H: ComplexHenon, cycle: np.ndarray, n: int) -> np.ndarray:
    """G_n = max of (1/d^n) log+ ||H^(+-n)|| at each point of a cycle, read off the
    cycle itself.  Iterating in floating point would drift off a strongly
    repelling cycle long before n steps."""
    x = np.asarray(cycle, dtype=complex)
    lognorm = np.log(np.maximum(np.abs(x), np.abs(np.roll(x, 1))))
    fwd = np.roll(lognorm, -n)
    bwd = np.roll(lognorm, n)
    return np.maximum(np.maximum(fwd, bwd), 0.0) / float(H.d) ** n


def run_green_uniformity(family: HenonFamily, base: HybridBase, n_range: Sequence[int] = range(2, 9),
                         sample_size: int = 4000, N: Optional[int] = None,
                         rng: Optional[np.random.Generator] = None, threads: int = 1) -> DegenerationReport:
    """Measure sup |G_N - G_n| / log|t|^-1 against (alpha + beta) / d^n.

    G_t itself is a limit; G_N stands in for it and the assertion is widened
    by the same bound at N, which keeps it sound.
    """
    n_range = list(n_range)
    if min(n_range) < 2:
        raise ValueError("n_range must start at 2 or later")
    N = N if N is not None else max(n_range) + 8
    rng = rng or np.random.default_rng(0)
    seeds = rng.integers(0, 2 ** 63 - 1, size=len(base.t_samples))
    d = family.d

    def job(k):
        t0 = base.t_samples[k]
        H = family.at(t0).certified()
        x, y = sample_points(H, sample_size, np.random.default_rng(seeds[k]))
        L = math.log(1.0 / abs(t0))
        alpha, beta = uniformity_constants_at(H, t0)
        cycles = periodic_cycles(H, np.random.default_rng(seeds[k]))
        gN = green_n_array(H, x, y, N, 0)
        cN = [cycle_green_n(H, c, N) for c in cycles]
        rows = []
        for n in n_range:
            gap = float(np.max(np.abs(gN - green_n_array(H, x, y, n, 0))))
            for c, g in zip(cycles, cN):
                gap = max(gap, float(np.max(np.abs(g - cycle_green_n(H, c, n)))))
            bound = (alpha + beta) / d ** n
            allowed = (alpha + beta) * (d ** -n + d ** -N)
            rows.append({"t_abs": abs(t0), "n": n, "sup_gap": gap, "ratio": gap / L,
                         "bound": bound, "pass": gap / L <= allowed, "alpha": alpha, "beta": beta})
        return rows

    report = DegenerationReport("uniformity", UNIFORMITY_HEADER)
    for rows in _map(job, range(len(base.t_samples)), threads):
        report.rows.extend(rows)
    for row in report.rows:
        if not row["pass"]:
            report.violations.append({"t_abs": row["t_abs"], "n": row["n"], "ratio": row["ratio"],
                                      "bound": row["bound"]})
    spread = {}
    for n in n_range:
        ratios = [row["ratio"] for row in report.rows if row["n"] == n]
        positive = [q for q in ratios if q > 0]
        spread[n] = max(positive) / min(positive) if positive else 1.0
    report.summary = {"N": N, "spread": spread, "sample_size": sample_size,
                      "max_spread": max(spread.values())}
    return report


def rescaled(f: Callable, s: float) -> Callable:
    """Observable on C^2 from f(U, V, s) with U = s log|x|, V = s log|y|."""
    def g(x, y):
        with np.errstate(divide="ignore"):
            return f(s * np.log(np.abs(x)), s * np.log(np.abs(y)), s)
    return g


def capped_log_x(U, V, s):
    """s log max(|x|, e) in rescaled form; tends to min(U, 0) as s -> 0."""
    return np.minimum(U, s)


DEFAULT_OBSERVABLES = {
    "sum": lambda U, V, s: U + V,
    "product": lambda U, V, s: U * V,
    "capped_log_x": capped_log_x,
}


def valuation_candidates(family: HenonFamily, step: Fraction = Fraction(1, 4),
                         span: Optional[int] = None) -> List[ValPoint]:
    """Grid of rational valuation points covering the region W and its rim."""
    rho = family.orders().radius_exponent()
    span = span if span is not None else -rho + 1
    k = int(span / step)
    vals = [step * i for i in range(-k, k + 1)]
    return [ValPoint(u, v) for u in vals for v in vals]


@dataclass
class TropicalPrediction:
    """Valuation point carrying the limit measure, when it is unique."""

    point: Optional[ValPoint]
    candidates: List[ValPoint]
    tie_free: bool

    def limit(self, f: Callable, r: float) -> Optional[float]:
        if self.point is None:
            return None
        c = math.log(1.0 / r)
        return float(f(np.array([float(self.point.u) * c]), np.array([float(self.point.v) * c]), 0.0)[0])


def tropical_prediction(family: HenonFamily, step: Fraction = Fraction(1, 4)) -> TropicalPrediction:
    """Valuation points not certified to escape; a unique one predicts the limit.

    ``tie_free`` records whether the forward and backward tropical steps at
    the predicted point avoid ties (otherwise the prediction rests on the
    ordering argument alone: all nearby orders escape).
    """
    core = tropical_core(family, valuation_candidates(family, step))
    if len(core) != 1:
        return TropicalPrediction(None, core, False)
    w = core[0]
    tie_free = True
    for inverse in (False, True):
        try:
            tropical_step(w, family.orders(), inverse)
        except TropicalTie:
            tie_free = False
    return TropicalPrediction(w, core, tie_free)


def tropical_grid(point: ValPoint, t0, n_per_axis: int = 24, half_width: float = 1.5,
                  smoothing_eps: Optional[float] = None) -> GridSpec:
    """Log-polar grid around |x| = |t|^u, |y| = |t|^v, i.e. log|x| = -u log|t|^-1."""
    L = math.log(1.0 / abs(complex(t0)))
    cx, cy = -float(point.u) * L, -float(point.v) * L
    return GridSpec.log_polar((cx - half_width, cx + half_width), (cy - half_width, cy + half_width),
                              n_per_axis, smoothing_eps)


def horseshoe_grid(H: ComplexHenon, t0, n_per_axis: int = 24, half_width: float = 1.5,
                   smoothing_eps: Optional[float] = None) -> GridSpec:
    """Log-polar grid with log|x|, log|y| in log|t|^-1 +- half_width."""
    return tropical_grid(ValPoint(Fraction(-1), Fraction(-1)), t0, n_per_axis, half_width, smoothing_eps)


def run_measure_convergence(family: HenonFamily, base: HybridBase,
                            observables: Optional[Dict[str, Callable]] = None,
                            grid_factory: Optional[Callable] = None,
                            prediction: Optional[TropicalPrediction] = None,
                            threads: int = 1) -> DegenerationReport:
    """Pair rescaled observables with the grid measure at each t.

    ``observables`` map names to functions f(U, V, s) of the rescaled
    coordinates U = s log|x|, V = s log|y| with s = scale_factor(t, r);
    the prediction evaluates them at s = 0.
    """
    prediction = prediction if prediction is not None else tropical_prediction(family)
    if grid_factory is None:
        if prediction.point is not None:
            grid_factory = lambda H, t0: tropical_grid(prediction.point, t0)
        else:
            grid_factory = lambda H, t0: GridSpec.filtration_box(H)
    observables = observables or DEFAULT_OBSERVABLES
    names = sorted(observables)

    def job(t0):
        H = family.at(t0).certified()
        m = ma_measure(build_green_grid(H, grid_factory(H, t0)))
        s = scale_factor(t0, base.r)
        row = {"t_abs": abs(t0), "scale": s, "mass": m.total_mass, "clipped": m.clipped_mass}
        for name in names:
            row[name] = integrate(m, rescaled(observables[name], s))
        return row

    header = ("t_abs", "scale", "mass", "clipped") + tuple(names)
    report = DegenerationReport("measure", header)
    report.rows = _map(job, base.t_samples, threads)
    stab, diffs, pred, rel = {}, {}, {}, {}
    for name in names:
        seq = [row[name] for row in report.rows]
        dif = [abs(b - a) for a, b in zip(seq, seq[1:])]
        diffs[name] = dif
        tail = dif[-3:]
        stab[name] = len(tail) == 3 and all(b < a for a, b in zip(tail, tail[1:]))
        p = prediction.limit(observables[name], base.r)
        pred[name] = p
        if p is not None:
            rel[name] = abs(seq[-1] - p) / max(abs(p), 1e-12)
        if not stab[name]:
            report.violations.append({"observable": name, "kind": "not stabilizing", "differences": dif})
    report.summary = {
        "differences": diffs, "stabilizing": stab, "prediction": pred, "relative_error": rel,
        "predicted_point": prediction.point.to_json() if prediction.point else None,
        "prediction_tie_free": prediction.tie_free,
        "core_size": len(prediction.candidates),
    }
    return report


def run_lyapunov_degeneration(family: HenonFamily, base: HybridBase, n_steps: int = 10000,
                              start: Tuple[complex, complex] = (0.0, 0.0), period: int = 1,
                              transient: int = 100, threads: int = 1) -> DegenerationReport:
    """Exponents at each t and their normalized slopes against log|t|^-1.

    The forward orbit of ``start`` is used when it stays bounded; otherwise
    an exact cycle of the given period.  The total exponent always equals
    log|a(t)|, so (l1 + l2) / log|t|^-1 tends to -ord(a).
    """
    ord_a = family.a.order

    def job(t0):
        H = family.at(t0).certified()
        try:
            res = lyapunov_qr(H, start, n_steps, transient=transient)
        except OrbitEscaped:
            res = lyapunov_cycle(H, n_steps, period)
        L = math.log(1.0 / abs(t0))
        total = res.lambda1 + res.lambda2
        return {"t_abs": abs(t0), "lambda1": res.lambda1, "lambda2": res.lambda2,
                "sum_residual": res.sum_residual, "total_slope": total / L,
                "slope_residual": abs(total / L + ord_a), "lambda1_slope": res.lambda1 / L,
                "mode": res.mode}

    header = ("t_abs", "lambda1", "lambda2", "sum_residual", "total_slope", "slope_residual",
              "lambda1_slope", "mode")
    report = DegenerationReport("lyapunov", header)
    report.rows = _map(job, base.t_samples, threads)
    for row in report.rows:
        if row["sum_residual"] > 1e-6:
            report.violations.append({"t_abs": row["t_abs"], "kind": "sum identity",
                                      "sum_residual": row["sum_residual"]})
    res = [row["slope_residual"] for row in report.rows]
    monotone = all(b < a for a, b in zip(res, res[1:])) or all(v == 0 for v in res)
    final = report.rows[-1]["total_slope"]
    report.summary = {
        "ord_a": ord_a, "predicted_slope": -ord_a, "final_slope": final,
        "residuals_decreasing": monotone, "final_residual": res[-1],
        # the slope formula read with the opposite sign would predict +ord(a)
        "sign_matches_log_a": abs(final + ord_a) <= abs(final - ord_a),
        "lambda1_slopes": [row["lambda1_slope"] for row in report.rows],
    }
    return report


HOMOGENIZATION_HEADER = ("n", "t_abs", "degree", "structure_ok", "identity_residual", "growth_constant")


def run_homogenization(family: HenonFamily, base: HybridBase, n_max: int = 3, sample_size: int = 2000,
                       budget: int = DEFAULT_SYMBOLIC_BUDGET, rng: Optional[np.random.Generator] = None,
                       tol: float = 1e-12) -> Tuple[DegenerationReport, List[HomogeneousDatum]]:
    """Symbolic structure checks and the model-function identity for n = 1..n_max.

    Sample points are complex Gaussian with scale R at each t.  Returns the
    report and the homogeneous data (for snapshots).
    """
    rng = rng or np.random.default_rng(0)
    report = DegenerationReport("homogenization", HOMOGENIZATION_HEADER)
    data = []
    growth = {row["n"]: row for row in coefficient_growth(family, range(1, n_max + 1), base.r, budget)}
    for n in range(1, n_max + 1):
        try:
            datum = homogenize_datum(family, n, budget)
        except StructureViolation as exc:
            report.violations.append({"n": n, "kind": "structure", "message": str(exc)})
            continue
        data.append(datum)
        for t0 in base.t_samples:
            H = family.at(t0).certified()
            z = rng.normal(size=(4, sample_size)) * H.R
            x, y = z[0] + 1j * z[1], z[2] + 1j * z[3]
            res = float(np.max(np.abs(model_identity_residual(datum, H, x, y))))
            report.rows.append({"n": n, "t_abs": abs(t0), "degree": datum.degree, "structure_ok": True,
                                "identity_residual": res,
                                "growth_constant": growth[n]["growth_constant"]})
            if not res <= tol:
                report.violations.append({"n": n, "t_abs": abs(t0), "kind": "identity",
                                          "residual": res})
    report.summary = {"n_max": n_max, "sample_size": sample_size, "tolerance": tol,
                      "max_identity_residual": max((row["identity_residual"] for row in report.rows),
                                                   default=None),
                      "growth": [growth[n] for n in sorted(growth)]}
    return report, data
