"""Deterministic JSON emission: sorted keys, rationals as ``"p/q"`` strings,
floats with 17 significant digits."""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .expr import Expr, unparse
from .poly import fmt_rational


def _float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = f"{x:.17g}"
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj, indent=2):
    """Serialize ``obj``; objects with ``to_json`` are expanded first."""
    return _emit(obj, indent, 0)


def _emit(obj, indent, level):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if hasattr(obj, "to_json") and not isinstance(obj, type):
        return _emit(obj.to_json(), indent, level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return json.dumps(fmt_rational(obj))
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if hasattr(obj, "dtype") and getattr(obj, "shape", None) == ():
        return _emit(obj.item(), indent, level)
    if isinstance(obj, Expr):
        return json.dumps(unparse(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)) or hasattr(obj, "tolist"):
        seq = obj.tolist() if hasattr(obj, "tolist") else obj
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) and not hasattr(v, "to_json") for v in seq):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in seq) + "]"
        return "[" + pad + ("," + pad).join(_emit(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
