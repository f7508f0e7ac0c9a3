"""Exact gift-wrapping convex hull for full-dimensional integer point sets.

Facets are found by rotating a known facet's hyperplane around each of its
ridges until it hits the next point set; ridges are themselves computed
recursively as facets of the facet. All predicates are exact integer
arithmetic. Masks are Python ints used as bitsets over the input indices.
"""

from __future__ import annotations

from math import gcd
from typing import NamedTuple

import numpy as np

from .exact_linalg import det, nullspace, rank

_INT64_SAFE = 1 << 62


class HullFacet(NamedTuple):
    normal: tuple   # inward: normal . x >= offset for every input point
    offset: int
    mask: int       # input points lying on the facet


def mask_from_bool(flags: np.ndarray) -> int:
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


def bool_from_mask(mask: int, n: int) -> np.ndarray:
    raw = mask.to_bytes((n + 7) // 8 or 1, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n].astype(bool)


def indices(mask: int) -> list:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _reduce(normal, offset):
    g = abs(offset)
    for x in normal:
        g = gcd(g, x)
    if g > 1:
        return tuple(x // g for x in normal), offset // g
    return tuple(normal), offset


class _Points:
    """Integer points with exact vectorised dot products."""

    def __init__(self, points):
        self.rows = [tuple(int(x) for x in p) for p in points]
        self.n = len(self.rows)
        self.dim = len(self.rows[0])
        self.bound = max((abs(x) for p in self.rows for x in p), default=0)
        self.arr = np.array(self.rows, dtype=np.int64) if self.bound < _INT64_SAFE else None
        self._obj = None

    def dots(self, v) -> np.ndarray:
        if self.arr is not None and self.bound * (sum(abs(x) for x in v) + 1) < _INT64_SAFE:
            return self.arr @ np.array(v, dtype=np.int64)
        if self._obj is None:
            self._obj = np.array(self.rows, dtype=object)
        return self._obj @ np.array(v, dtype=object)

    def slack(self, normal, offset) -> np.ndarray:
        return self.dots(normal) - offset


def _rotate(pts: _Points, a, b, den, w, c):
    """Rotate the supporting hyperplane a.x = b about {a.x = b, w.x = c}.

    ``den`` holds a.x - b (non-negative). Among points strictly off the
    current face the hyperplane pivots to the first point hit. Returns the
    new (normal, offset, mask).
    """
    num = pts.slack(w, c)
    off = den > 0
    nums = num[off]
    dens = den[off]
    ratios = nums.astype(float) / dens.astype(float)
    lo = ratios.min()
    tol = 1e-9 * (1.0 + abs(lo))
    cand = np.nonzero(ratios <= lo + tol)[0]
    p, q = int(nums[cand[0]]), int(dens[cand[0]])
    for i in cand[1:]:
        u, v = int(nums[i]), int(dens[i])
        if u * q < p * v:
            p, q = u, v
    normal = tuple(q * wi - p * ai for wi, ai in zip(w, a))
    offset = q * c - p * b
    normal, offset = _reduce(normal, offset)
    slack = pts.slack(normal, offset)
    return normal, offset, mask_from_bool(slack == 0)


def _face_dim(pts: _Points, mask: int) -> int:
    idx = indices(mask)
    base = pts.rows[idx[0]]
    return rank([[x - y for x, y in zip(pts.rows[i], base)] for i in idx[1:]]) if len(idx) > 1 else 0


def _initial_facet(pts: _Points, lower: bool) -> HullFacet:
    d = pts.dim
    if lower:
        a = tuple(int(i == d - 1) for i in range(d))
    else:
        a = tuple(int(i == 0) for i in range(d))
    vals = pts.dots(a)
    b = int(vals.min())
    mask = mask_from_bool(vals == b)
    while _face_dim(pts, mask) < d - 1:
        idx = indices(mask)
        base = pts.rows[idx[0]]
        diffs = [[x - y for x, y in zip(pts.rows[i], base)] for i in idx[1:]]
        den = pts.slack(a, b)
        if lower:
            proj = [row[:-1] for row in diffs]
            comp = nullspace(proj, ncols=d - 1) if proj else nullspace([], ncols=d - 1)
            w = None
            for u in comp:
                cand = tuple(u) + (0,)
                vals_u = pts.slack(cand, sum(x * y for x, y in zip(cand, base)))
                if (vals_u != 0).any():
                    w = cand if (vals_u < 0).any() else tuple(-x for x in cand)
                    break
        else:
            comp = nullspace(diffs, ncols=d) if diffs else nullspace([], ncols=d)
            w = next(tuple(u) for u in comp if rank([list(u), list(a)]) == 2)
        c = sum(x * y for x, y in zip(w, base))
        a, b, mask = _rotate(pts, a, b, den, w, c)
    return HullFacet(a, b, mask)


def _ridges(pts: _Points, facet: HullFacet) -> list:
    """Facets of the facet, as (w, c, mask) with w lifted to the full space."""
    idx = indices(facet.mask)
    j = next(i for i, x in enumerate(facet.normal) if x != 0)
    sub = [pts.rows[i][:j] + pts.rows[i][j + 1:] for i in idx]
    out = []
    for r in hull_facets(sub):
        w = r.normal[:j] + (0,) + r.normal[j:]
        m = 0
        for k in indices(r.mask):
            m |= 1 << idx[k]
        out.append((w, r.offset, m))
    return out


def _simplex_facets(pts: _Points, lower: bool) -> list:
    d = pts.dim
    rows = pts.rows
    out = []
    for i in range(d + 1):
        others = [k for k in range(d + 1) if k != i]
        base = rows[others[0]]
        diffs = [[x - y for x, y in zip(rows[k], base)] for k in others[1:]]
        normal = []
        for col in range(d):
            minor = [r[:col] + r[col + 1:] for r in diffs]
            normal.append((-1) ** col * det(minor))
        offset = sum(x * y for x, y in zip(normal, base))
        if sum(x * y for x, y in zip(normal, rows[i])) < offset:
            normal = [-x for x in normal]
            offset = -offset
        normal, offset = _reduce(normal, offset)
        if lower and normal[-1] <= 0:
            continue
        mask = ((1 << (d + 1)) - 1) ^ (1 << i)
        out.append(HullFacet(normal, offset, mask))
    return sorted(out, key=lambda f: f.normal)


def _polygon_facets(pts: _Points) -> list:
    """Edges of a full-dimensional polygon via the monotone chain."""
    ordered = sorted(set(pts.rows))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower_chain = chain(ordered)
    upper_chain = chain(reversed(ordered))
    ring = lower_chain[:-1] + upper_chain[:-1]  # counter-clockwise
    out = []
    for a, b in zip(ring, ring[1:] + ring[:1]):
        normal = (a[1] - b[1], b[0] - a[0])
        normal, offset = _reduce(normal, normal[0] * a[0] + normal[1] * a[1])
        out.append(HullFacet(normal, offset, mask_from_bool(pts.slack(normal, offset) == 0)))
    return sorted(out, key=lambda f: f.normal)


def hull_facets(points, lower: bool = False) -> list:
    """All facets (or only lower facets) of conv(points).

    ``points`` must be integer and affinely span their ambient space.
    Lower facets are those whose inward normal has positive last coordinate.
    """
    pts = points if isinstance(points, _Points) else _Points(points)
    d = pts.dim
    if d == 1:
        if lower:
            raise ValueError("lower hull needs at least two coordinates")
        vals = [p[0] for p in pts.rows]
        lo, hi = min(vals), max(vals)
        flags_lo = np.array([v == lo for v in vals])
        flags_hi = np.array([v == hi for v in vals])
        return [HullFacet((1,), lo, mask_from_bool(flags_lo)),
                HullFacet((-1,), -hi, mask_from_bool(flags_hi))]
    if pts.n == d + 1:
        return _simplex_facets(pts, lower)
    if d == 2 and not lower:
        return _polygon_facets(pts)
    first = _initial_facet(pts, lower)
    found = {first.normal: first}
    order = [first]
    ridge_owner = {}
    queue = [first]
    while queue:
        F = queue.pop()
        den = None
        for w, c, rmask in _ridges(pts, F):
            if rmask in ridge_owner:
                continue
            ridge_owner[rmask] = F.normal
            if den is None:
                den = pts.slack(F.normal, F.offset)
            normal, offset, mask = _rotate(pts, F.normal, F.offset, den, w, c)
            if lower and normal[-1] <= 0:
                continue
            if normal not in found:
                G = HullFacet(normal, offset, mask)
                found[normal] = G
                order.append(G)
                queue.append(G)
    return sorted(order, key=lambda f: f.normal)
