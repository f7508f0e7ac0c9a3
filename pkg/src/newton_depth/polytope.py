"""V-represented polytopes with exact hull, face, and sum operations.

A :class:`Polytope` is stored in canonical form: its vertex set, minimal,
deduplicated and lexicographically sorted, so structural equality is
geometric equality. Coordinates are ``int`` for lattice polytopes and
``Fraction`` where a vertex is not integral.

Heavy lifting (facets, face lattice) happens in affine lattice coordinates
of Aff(P), where P is full-dimensional and the hull engine applies.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, NamedTuple, Optional, Sequence

from . import _hull
from .errors import CapsExceeded, PreconditionError
from .exact_linalg import (
    NormalizationMap,
    convex_combination,
    det,
    normalization_map,
    primitive,
)


@dataclass(frozen=True)
class Caps:
    max_ambient: int = 8
    max_vertices: int = 512
    max_candidates: int = 40000


_CAPS = contextvars.ContextVar("newton_depth_caps", default=Caps())


def current_caps() -> Caps:
    return _CAPS.get()


@contextlib.contextmanager
def caps_scope(**overrides):
    """Temporarily override the polytope size caps in the current context."""
    token = _CAPS.set(Caps(**{**current_caps().__dict__, **overrides}))
    try:
        yield current_caps()
    finally:
        _CAPS.reset(token)


def _scalar(x):
    if isinstance(x, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else x
    if isinstance(x, str):
        return _scalar(Fraction(x))
    if isinstance(x, float):
        raise TypeError("floating-point coordinates are not accepted")
    # numpy integers and friends
    return _scalar(int(x)) if int(x) == x else _scalar(Fraction(x))


def _point(p) -> tuple:
    return tuple(_scalar(x) for x in p)


class Facet(NamedTuple):
    normal: tuple    # primitive integer, inward: normal . x >= offset on P
    offset: object
    vertices: tuple


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many rational points, in canonical form.

    Build instances with :func:`from_points`; the constructor trusts its
    input to already be a canonical vertex list.
    """

    ambient: int
    vertices: tuple

    @property
    def is_lattice(self) -> bool:
        return all(isinstance(x, int) for v in self.vertices for x in v)

    @property
    def dim(self) -> int:
        return self.frame.rank

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def frame(self) -> NormalizationMap:
        return normalization_map(self.vertices)

    @cached_property
    def _coords(self) -> list:
        """Vertex coordinates in the frame, scaled to integers if needed."""
        coords = [self.frame.forward(v) for v in self.vertices]
        den = 1
        for y in coords:
            for x in y:
                if isinstance(x, Fraction):
                    den = lcm(den, x.denominator)
        if den != 1:
            coords = [tuple(int(x * den) for x in y) for y in coords]
        return coords

    @cached_property
    def _hull(self) -> list:
        if self.dim == 0:
            return []
        return _hull.hull_facets(self._coords)

    @cached_property
    def _facet_masks(self) -> list:
        return [f.mask for f in self._hull]

    @cached_property
    def _face_memo(self) -> dict:
        return {}

    def _sub(self, mask: int) -> "Polytope":
        """The face with the given vertex mask, carrying the induced face lattice."""
        idx = _hull.indices(mask)
        face = Polytope(self.ambient, tuple(self.vertices[i] for i in idx))
        if len(idx) > 1:
            pos = {i: k for k, i in enumerate(idx)}
            sub_masks = []
            for m in self.facets_of_mask(mask):
                sm = 0
                for i in _hull.indices(m):
                    sm |= 1 << pos[i]
                sub_masks.append(sm)
            face.__dict__["_facet_masks"] = sub_masks
        return face

    def facets_of_mask(self, mask: int) -> list:
        """Facets of the face ``mask`` as vertex masks (maximal proper intersections)."""
        memo = self._face_memo
        if mask in memo:
            return memo[mask]
        full = (1 << len(self.vertices)) - 1
        if mask == full:
            out = sorted(set(self._facet_masks))
        else:
            cands = set()
            for f in self._facet_masks:
                m = f & mask
                if m and m != mask:
                    cands.add(m)
            ordered = sorted(cands, key=lambda m: (-bin(m).count("1"), m))
            out = []
            for m in ordered:
                if not any(m & k == m for k in out):
                    out.append(m)
            out.sort()
        memo[mask] = out
        return out

    def _ambient_normal(self, coord_normal) -> tuple:
        return primitive(self.frame.pullback(coord_normal))

    def witness(self, mask: int) -> tuple:
        """A direction whose minimisers over P are exactly the face ``mask``."""
        full = (1 << len(self.vertices)) - 1
        if mask == full:
            return (0,) * self.ambient
        total = [0] * self.ambient
        for f in self._hull:
            if f.mask & mask == mask:
                n = self._ambient_normal(f.normal)
                total = [a + b for a, b in zip(total, n)]
        return tuple(total)

    def __repr__(self):
        return f"Polytope(ambient={self.ambient}, vertices={list(self.vertices)})"


@dataclass(frozen=True)
class Face:
    polytope: Polytope
    direction: tuple
    dim: int


def _check_caps(ambient: int, n_vertices: int = 0, n_candidates: int = 0):
    caps = current_caps()
    if ambient > caps.max_ambient:
        raise CapsExceeded(f"ambient dimension {ambient} exceeds cap {caps.max_ambient}")
    if n_vertices > caps.max_vertices:
        raise CapsExceeded(f"{n_vertices} vertices exceed cap {caps.max_vertices}")
    if n_candidates > caps.max_candidates:
        raise CapsExceeded(f"{n_candidates} candidate points exceed cap {caps.max_candidates}")


def from_points(points: Iterable[Sequence]) -> Polytope:
    """Canonical polytope conv(points); non-vertices are discarded."""
    pts = sorted({_point(p) for p in points})
    if not pts:
        raise PreconditionError("from_points needs at least one point")
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise PreconditionError("points have mixed dimensions")
    _check_caps(n, n_candidates=len(pts))
    if len(pts) == 1:
        return Polytope(n, (pts[0],))
    scratch = Polytope(n, tuple(pts))
    if scratch.dim == 0:
        return Polytope(n, (pts[0],))
    hull = scratch._hull
    N = len(pts)
    containing = [[] for _ in range(N)]
    for k, f in enumerate(hull):
        for i in _hull.indices(f.mask):
            containing[i].append(k)
    keep = []
    for i in range(N):
        inter = (1 << N) - 1
        for k in containing[i]:
            inter &= hull[k].mask
        if inter == 1 << i:
            keep.append(i)
    _check_caps(n, n_vertices=len(keep))
    P = Polytope(n, tuple(pts[i] for i in keep))
    # lexicographic minimum is always a vertex, so the frame carries over
    P.__dict__["frame"] = scratch.frame
    pos = {i: k for k, i in enumerate(keep)}
    new_hull = []
    for f in hull:
        m = 0
        for i in _hull.indices(f.mask):
            if i in pos:
                m |= 1 << pos[i]
        new_hull.append(_hull.HullFacet(f.normal, f.offset, m))
    if scratch.__dict__.get("_coords") is not None:
        coords = scratch._coords
        P.__dict__["_coords"] = [coords[i] for i in keep]
    P.__dict__["_hull"] = new_hull
    return P


def simplex(n: int) -> Polytope:
    """conv{0, e_1, ..., e_n}."""
    if n < 1:
        raise PreconditionError("simplex dimension must be at least 1")
    pts = [tuple(0 for _ in range(n))] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return from_points(pts)


def dim(P: Polytope) -> int:
    return P.dim


def _same_ambient(P: Polytope, Q: Polytope):
    if P.ambient != Q.ambient:
        raise PreconditionError(f"ambient dimensions differ: {P.ambient} vs {Q.ambient}")


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    _same_ambient(P, Q)
    _check_caps(P.ambient, n_candidates=len(P) * len(Q))
    return from_points(tuple(a + b for a, b in zip(p, q)) for p in P.vertices for q in Q.vertices)


def conv_union(P: Polytope, Q: Polytope) -> Polytope:
    _same_ambient(P, Q)
    return from_points(P.vertices + Q.vertices)


def _argmin_mask(P: Polytope, c: Sequence) -> int:
    vals = [sum(a * b for a, b in zip(c, v)) for v in P.vertices]
    lo = min(vals)
    m = 0
    for i, v in enumerate(vals):
        if v == lo:
            m |= 1 << i
    return m


def argmin_face(P: Polytope, c: Sequence) -> Polytope:
    """Minimisers of c over P; c may be zero, giving P itself."""
    if len(c) != P.ambient:
        raise PreconditionError("direction has the wrong length")
    mask = _argmin_mask(P, [_scalar(x) for x in c])
    if mask == (1 << len(P.vertices)) - 1:
        return P
    return P._sub(mask)


def face_in_direction(P: Polytope, c: Sequence) -> Face:
    """The face argmin{c . x : x in P} for a nonzero direction c."""
    c = tuple(_scalar(x) for x in c)
    if not any(c):
        raise PreconditionError("face_in_direction needs a nonzero direction")
    F = argmin_face(P, c)
    return Face(F, c, F.dim)


def facets(P: Polytope) -> list:
    """Irredundant inward halfspaces of P within Aff(P)."""
    if P.dim == 0:
        raise PreconditionError("a point has no facets")
    cached = P.__dict__.get("_facet_list")
    if cached is not None:
        return list(cached)
    out = []
    for f in P._hull:
        normal = P._ambient_normal(f.normal)
        verts = tuple(P.vertices[i] for i in _hull.indices(f.mask))
        offset = sum(a * b for a, b in zip(normal, verts[0]))
        out.append(Facet(normal, offset, verts))
    out.sort()
    P.__dict__["_facet_list"] = tuple(out)
    return out


def faces_of_dim_at_least(P: Polytope, d: int) -> list:
    """Every face of P of dimension >= d, P included, each exactly once.

    Faces are walked top-down: the facets of a face are its maximal proper
    intersections with facets of P.
    """
    r = P.dim
    if not 0 <= d <= r:
        raise PreconditionError(f"need 0 <= d <= dim(P) = {r}, got {d}")
    full = (1 << len(P.vertices)) - 1
    levels = [[full]]
    for _ in range(r - d):
        nxt = set()
        for m in levels[-1]:
            nxt.update(P.facets_of_mask(m))
        levels.append(sorted(nxt))
    out = []
    for k, level in enumerate(levels):
        for m in level:
            sub = P if m == full else P._sub(m)
            out.append(Face(sub, P.witness(m), r - k))
    return out


def equal(P: Polytope, Q: Polytope) -> bool:
    return P.ambient == Q.ambient and P.vertices == Q.vertices


def contains(P: Polytope, x: Sequence) -> bool:
    """Exact membership test by convex-combination feasibility."""
    if len(x) != P.ambient:
        raise PreconditionError("point has the wrong length")
    return convex_combination(P.vertices, [_scalar(v) for v in x]) is not None


def in_halfspaces(P: Polytope, x: Sequence) -> bool:
    """Membership by the facet inequalities of P inside Aff(P)."""
    x = [_scalar(v) for v in x]
    if len(x) != P.ambient:
        raise PreconditionError("point has the wrong length")
    try:
        P.frame.forward(x)
    except ValueError:
        return False
    if P.dim == 0:
        return tuple(x) == P.vertices[0]
    return all(sum(a * b for a, b in zip(f.normal, x)) >= f.offset for f in facets(P))


def translate(P: Polytope, t: Sequence) -> Polytope:
    t = _point(t)
    if len(t) != P.ambient:
        raise PreconditionError("translation has the wrong length")
    # translation preserves lexicographic order
    return Polytope(P.ambient, tuple(tuple(a + b for a, b in zip(v, t)) for v in P.vertices))


def unimodular_image(P: Polytope, U: Sequence[Sequence[int]], t: Optional[Sequence] = None) -> Polytope:
    """The image x -> U x + t for an integer matrix U with det(U) = +-1."""
    n = P.ambient
    if len(U) != n or any(len(row) != n for row in U):
        raise PreconditionError("U must be square of the ambient size")
    if any(not isinstance(x, int) for row in U for x in row) or abs(det(U)) != 1:
        raise PreconditionError("U is not unimodular")
    t = _point(t) if t is not None else (0,) * n
    img = [tuple(sum(a * b for a, b in zip(row, v)) + s for row, s in zip(U, t)) for v in P.vertices]
    return Polytope(n, tuple(sorted(img)))


def dilate(P: Polytope, w: int) -> Polytope:
    """w * P for an integer w >= 0 (vertex scaling)."""
    if w < 0:
        raise PreconditionError("dilation factor must be non-negative")
    if w == 0:
        return Polytope(P.ambient, ((0,) * P.ambient,))
    return Polytope(P.ambient, tuple(tuple(w * x for x in v) for v in P.vertices))


def point(p: Sequence) -> Polytope:
    p = _point(p)
    return Polytope(len(p), (p,))


def to_json(P: Polytope) -> dict:
    from .jsonio import encode_polytope
    return encode_polytope(P)


def from_json(data: dict) -> Polytope:
    from .jsonio import decode_polytope
    return decode_polytope(data)
