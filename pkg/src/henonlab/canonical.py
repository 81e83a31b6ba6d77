"""Deterministic JSON text: sorted keys, two-space indent, floats at 17
significant digits, exact rationals as [numerator, denominator]."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _encode(obj, level: int = 0) -> str:
    pad = "  " * (level + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * level + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, level + 1) for v in obj) + "\n" + "  " * level + "]"
    if isinstance(obj, float):
        return f"{obj:.17g}" if math.isfinite(obj) else "null"
    return json.dumps(obj)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, floats at 17 significant digits."""
    return _encode(_canonical(obj))
