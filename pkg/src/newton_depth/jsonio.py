"""Stable JSON encoding of exact scalars, vectors and polytopes.

Integers outside the 53-bit safe range become decimal strings, non-integral
fractions become "p/q" strings. Output is deterministic: fixed key order
as built, no whitespace variation, trailing newline.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import SchemaError

SCHEMA_VERSION = "1.0"
_SAFE = 1 << 53


def encode_scalar(x):
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, Fraction):
        if x.denominator != 1:
            return f"{x.numerator}/{x.denominator}"
        x = x.numerator
    if isinstance(x, int):
        return x if -_SAFE < x < _SAFE else str(x)
    raise TypeError(f"cannot encode {type(x).__name__} exactly")


def decode_scalar(x):
    if isinstance(x, bool):
        raise SchemaError("booleans are not numbers here")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            v = Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad number {x!r}") from exc
        return v.numerator if v.denominator == 1 else v
    if isinstance(x, float):
        raise SchemaError(f"floating-point value {x!r} is not exact; use an integer or a 'p/q' string")
    raise SchemaError(f"expected a number, got {type(x).__name__}")


def encode_vector(v) -> list:
    return [encode_scalar(x) for x in v]


def decode_vector(v) -> tuple:
    if not isinstance(v, list):
        raise SchemaError(f"expected a list of numbers, got {type(v).__name__}")
    return tuple(decode_scalar(x) for x in v)


def encode_polytope(P) -> dict:
    return {"ambient": P.ambient, "vertices": [encode_vector(v) for v in P.vertices]}


def decode_polytope(data):
    from .polytope import from_points

    if not isinstance(data, dict) or "vertices" not in data:
        raise SchemaError("polytope JSON needs a 'vertices' list")
    verts = data["vertices"]
    if not isinstance(verts, list) or not verts:
        raise SchemaError("polytope JSON needs a nonempty 'vertices' list")
    pts = [decode_vector(v) for v in verts]
    ambient = data.get("ambient", len(pts[0]))
    if not isinstance(ambient, int) or any(len(p) != ambient for p in pts):
        raise SchemaError("vertex lengths do not match 'ambient'")
    return from_points(pts)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=True) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


def load_file(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
