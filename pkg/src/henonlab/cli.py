"""Command-line front end.

Exit codes: 0 success, 1 other library error, 2 unreadable input, 3 lost
precision or floating overflow, 4 tropical tie, 5 a report recorded violations.
Everything printed is canonical JSON (sorted keys, floats at 17 significant
digits), so identical inputs give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .canonical import dumps
from .complex_dynamics import green_certified
from .errors import (HenonLabError, InsufficientPrecision, IterateOverflow, StructureViolation,
                     TropicalTie)
from .family import DEFAULT_C, HenonFamily, normalize_family
from .homogenization import datum_to_json
from .hybrid_harness import (HybridBase, run_green_uniformity, run_homogenization,
                             run_lyapunov_degeneration, run_measure_convergence,
                             tropical_grid, tropical_prediction)
from .laurent import ORD_INF, LaurentPoly
from .measure import GridSpec
from .na_dynamics import (DEFAULT_NA_BUDGET, NAPoint, ValPoint, na_green_max, na_green_minus,
                          na_green_plus, na_val, tropical_orbit)

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_PRECISION, EXIT_TIE, EXIT_VIOLATION = 0, 1, 2, 3, 4, 5
DEFAULT_R = 0.5
DEFAULT_LADDER = (1, 2, 4, 8)
EXPERIMENTS = ("uniformity", "measure", "lyapunov", "homogenization")


class InputError(Exception):
    """Malformed command-line value or input file."""


def emit(obj, out=None) -> None:
    (out or sys.stdout).write(dumps(obj) + "\n")


# input parsing

def _registry() -> Registry:
    base = resources.files("henonlab") / "schemas"
    laurent = json.loads((base / "laurent.schema.json").read_text())
    return Registry().with_resource("laurent.schema.json", Resource.from_contents(laurent))


def load_schema(name: str) -> dict:
    return json.loads((resources.files("henonlab") / "schemas" / name).read_text())


def validate(data, schema_name: str) -> None:
    try:
        jsonschema.validate(data, load_schema(schema_name), registry=_registry())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{schema_name}: {where}: {exc.message}") from None


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_family(path: str, c: Optional[float] = None):
    """(family, r) from a family-spec file; c on the command line wins."""
    data = read_json(path)
    validate(data, "family.schema.json")
    if len(data["a_coeffs"]) != data["d"]:
        raise InputError(f"{path}: expected {data['d']} entries in a_coeffs")
    try:
        fam = HenonFamily.from_dict(data)
    except (ValueError, HenonLabError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if c is not None:
        fam = HenonFamily(fam.d, fam.a_coeffs, fam.a, c, fam.name)
    return fam, float(data.get("r", DEFAULT_R))


def parse_floats(text: str, count: int, what: str) -> List[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise InputError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r}") from None


def parse_complex(text: str, what: str = "--t") -> complex:
    re, im = parse_floats(text, 2, what)
    return complex(re, im)


def parse_valpoint(text: str) -> ValPoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"valuation point needs two orders U,V, got {text!r}")
    try:
        return ValPoint(*(ORD_INF if p.strip() == "inf" else Fraction(p.strip()) for p in parts))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse valuation point {text!r}") from None


def parse_ladder(text: str) -> List[int]:
    try:
        out = [int(p) for p in text.split(",")]
    except ValueError:
        raise InputError(f"ladder must list integers, got {text!r}") from None
    if not out or any(k < 1 for k in out) or sorted(set(out)) != out:
        raise InputError("ladder exponents must be positive and increasing")
    return out


def seed() -> int:
    raw = os.environ.get("HENONLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"HENONLAB_SEED must be an integer, got {raw!r}") from None


# commands

def cmd_green(args) -> int:
    fam, _ = load_family(args.spec, args.c)
    t0 = parse_complex(args.t)
    xr, xi, yr, yi = parse_floats(args.point, 4, "--point")
    try:
        H = fam.at(t0)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    est = green_certified(H, (complex(xr, xi), complex(yr, yi)), target_err=args.eps,
                          n_max=args.budget, which=args.which)
    out = est.to_dict()
    out.update(family=fam.name, t=t0, point=[complex(xr, xi), complex(yr, yi)], which=args.which)
    emit(out)
    return EXIT_OK


def _na_coords(path: str, r: float):
    data = read_json(path)
    schema = {"type": "object", "required": ["x", "y"], "additionalProperties": False,
              "properties": {"x": {"$ref": "laurent.schema.json"}, "y": {"$ref": "laurent.schema.json"}}}
    try:
        jsonschema.validate(data, schema, registry=_registry())
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path}: {exc.message}") from None
    return NAPoint.from_laurent(LaurentPoly.from_json(data["x"]), LaurentPoly.from_json(data["y"]), r)


def cmd_tropical(args) -> int:
    fam, r = load_family(args.spec, args.c)
    r = args.r if args.r is not None else r
    budget = args.budget if args.budget is not None else DEFAULT_NA_BUDGET
    green = {"plus": na_green_plus, "minus": na_green_minus, "max": na_green_max}
    out = {"family": fam.name}
    if args.coords:
        target = _na_coords(args.coords, r)
        try:
            w = na_val(target)
        except InsufficientPrecision:
            w = None
    else:
        if args.point is None:
            raise InputError("tropical needs --point U,V or --coords FILE")
        w = parse_valpoint(args.point)
        target = w
    if w is not None:
        orbit, tie = tropical_orbit(fam, w, args.steps, inverse=args.inverse)
        out["orbit"] = [q.to_json() for q in orbit]
        if tie is not None:
            out["tie"] = {"step": len(orbit) - 1, "terms": list(tie.terms), "order": tie.value}
    try:
        g = green[args.which](fam, target, budget)
    except TropicalTie as tie:
        out.setdefault("tie", {"terms": list(tie.terms), "order": tie.value})
        out["green"] = None
        emit(out)
        return EXIT_TIE
    out["green"] = g.to_json()
    out["which"] = args.which
    emit(out)
    return EXIT_OK


def _base(args, r_default: float) -> HybridBase:
    r = args.r if args.r is not None else r_default
    if not 0 < r < 1:
        raise InputError(f"--r must lie in (0, 1), got {r}")
    return HybridBase.ladder(r, parse_ladder(args.ladder))


def cmd_experiment(args) -> int:
    fam, r = load_family(args.spec, args.c)
    base = _base(args, r)
    rng = np.random.default_rng(seed())
    out_dir = Path(args.out)
    written = []
    if args.which == "uniformity":
        report = run_green_uniformity(fam, base, range(2, args.n_max + 1), args.samples,
                                      rng=rng, threads=args.threads)
    elif args.which == "measure":
        pred = tropical_prediction(fam)
        if pred.point is not None:
            factory = lambda H, t0: tropical_grid(pred.point, t0, args.resolution, smoothing_eps=args.eps)
        else:
            factory = lambda H, t0: GridSpec.filtration_box(H, args.resolution, args.eps)
        report = run_measure_convergence(fam, base, grid_factory=factory, prediction=pred,
                                         threads=args.threads)
    elif args.which == "lyapunov":
        report = run_lyapunov_degeneration(fam, base, args.steps, period=args.period,
                                           threads=args.threads)
    else:
        budget = args.budget if args.budget is not None else 64
        report, data = run_homogenization(fam, base, args.n_max, args.samples, budget, rng)
        out_dir.mkdir(parents=True, exist_ok=True)
        for datum in data:
            path = out_dir / f"homogenization_n{datum.n}.json"
            path.write_text(dumps(json.loads(datum_to_json(datum, exact=fam.is_exact()))) + "\n")
            written.append(str(path))
    written = [str(p) for p in report.write(out_dir)] + written
    emit({"experiment": args.which, "family": fam.name, "ok": report.ok,
          "summary": report.summary, "violations": report.violations, "files": written})
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _series_json(s, exact: bool) -> dict:
    return {"terms": s.to_poly().to_json(exact), "prec": s.prec}


def cmd_normalize(args) -> int:
    data = read_json(args.spec)
    validate(data, "general_family.schema.json")
    coeffs = [LaurentPoly.from_json(rows) for rows in data["coefficients"]]
    a, b = LaurentPoly.from_json(data["a"]), LaurentPoly.from_json(data["b"])
    prec = args.budget if args.budget is not None else int(data.get("prec", 24))
    c = args.c if args.c is not None else float(data.get("c", DEFAULT_C))
    res = normalize_family(coeffs, a, b, prec=prec, c=c)
    exact = res.family.is_exact() and all(f.is_exact() for f in coeffs + [a, b])
    family = res.family.to_dict(exact)
    family["name"] = data.get("name", "") + "_monic" if data.get("name") else "monic"
    emit({"family": family, "parameter_exponent": res.exponent, "terminated": res.exact,
          "lambda": _series_json(res.lam, exact), "mu": _series_json(res.mu, exact), "prec": res.prec})
    return EXIT_OK


# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, metavar="FILE", help="family JSON file")
    common.add_argument("--c", type=float, default=None, help="filtration constant (default from spec, else 5)")
    common.add_argument("--r", type=float, default=None, help="hybrid base r in (0, 1)")
    common.add_argument("--budget", type=int, default=None, help="iteration or symbolic budget")
    common.add_argument("--threads", type=int, default=1, help="worker pool size")

    p = argparse.ArgumentParser(prog="henonlab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("green", parents=[common], help="certified Green value at a point")
    g.add_argument("--t", required=True, metavar="RE,IM")
    g.add_argument("--point", required=True, metavar="XRE,XIM,YRE,YIM")
    g.add_argument("--eps", type=float, default=1e-12, help="target error bound")
    g.add_argument("--which", choices=("plus", "minus", "max"), default="max")
    g.set_defaults(func=cmd_green)

    t = sub.add_parser("tropical", parents=[common], help="valuation orbit and exact Green value")
    t.add_argument("--point", metavar="U,V", help="orders of x and y (rationals or inf)")
    t.add_argument("--coords", metavar="FILE", help='exact coordinates {"x": terms, "y": terms}')
    t.add_argument("--steps", type=int, default=8)
    t.add_argument("--inverse", action="store_true", help="iterate the inverse map")
    t.add_argument("--which", choices=("plus", "minus", "max"), default="plus")
    t.set_defaults(func=cmd_tropical)

    e = sub.add_parser("experiment", parents=[common], help="degeneration experiments")
    e.add_argument("which", choices=EXPERIMENTS)
    e.add_argument("--out", default="henonlab_out", metavar="DIR")
    e.add_argument("--ladder", default=",".join(map(str, DEFAULT_LADDER)), metavar="K1,K2,...",
                   help="t = r^k for each k")
    e.add_argument("--resolution", type=int, default=24, help="grid nodes per axis")
    e.add_argument("--eps", type=float, default=None, help="smoothing radius")
    e.add_argument("--samples", type=int, default=None, help="points per parameter value")
    e.add_argument("--n-max", type=int, default=None, dest="n_max")
    e.add_argument("--steps", type=int, default=10000, help="orbit length for exponents")
    e.add_argument("--period", type=int, default=1, help="cycle period when orbits escape")
    e.set_defaults(func=cmd_experiment)

    n = sub.add_parser("normalize", parents=[common], help="conjugate a general map to a monic family")
    n.set_defaults(func=cmd_normalize)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "experiment":
        homog = args.which == "homogenization"
        args.n_max = args.n_max if args.n_max is not None else (3 if homog else 8)
        args.samples = args.samples if args.samples is not None else (2000 if homog else 4000)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"henonlab: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InsufficientPrecision, IterateOverflow, OverflowError) as exc:
        print(f"henonlab: precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except TropicalTie as exc:
        print(f"henonlab: tie: {exc}", file=sys.stderr)
        return EXIT_TIE
    except StructureViolation as exc:
        print(f"henonlab: violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except HenonLabError as exc:
        print(f"henonlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
