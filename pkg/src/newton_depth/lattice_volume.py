"""Normalized lattice volume and the divisibility factors of sums and joins.

The normalized volume of an r-dimensional lattice polytope is r! times the
Euclidean volume of its image under affine lattice coordinates on Aff(P).
It is computed from a pulling triangulation: each simplex contributes the
absolute determinant of its edge vectors in those coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

from .errors import NotAffineProduct, NotJoin, PreconditionError
from .exact_linalg import LatticeBasis, NormalizationMap, det
from .polytope import Polytope, conv_union, minkowski_sum

__all__ = [
    "NormalizationMap",
    "Triangulation",
    "lattice_normalize",
    "triangulate",
    "normalized_volume",
    "affine_product_factor",
    "join_factor",
    "binom_parity",
]


@dataclass(frozen=True)
class Triangulation:
    """Simplices given as sorted tuples of indices into ``polytope.vertices``."""

    polytope: Polytope
    simplices: tuple

    def vertex_sets(self) -> list:
        V = self.polytope.vertices
        return [tuple(V[i] for i in s) for s in self.simplices]


def _require_lattice(P: Polytope):
    if not P.is_lattice:
        raise PreconditionError("normalized volume is defined for lattice polytopes only")


def lattice_normalize(P: Polytope) -> tuple:
    """Full-dimensional image of P in Z^r together with the coordinate map."""
    _require_lattice(P)
    frame = P.frame
    coords = sorted(frame.forward(v) for v in P.vertices)
    return Polytope(frame.rank, tuple(coords)), frame


def triangulate(P: Polytope) -> Triangulation:
    """Pulling triangulation: cone from the lowest-index vertex of each face.

    Every face F is split into cones from its first vertex v over the
    triangulated facets of F not containing v. The result depends only on
    the canonical vertex order, so it is reproducible.
    """
    memo = {}

    def tri(mask: int, d: int) -> list:
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        if d == 0:
            out = [low]
        else:
            out = []
            for g in P.facets_of_mask(mask):
                if g & low:
                    continue
                out.extend(s | low for s in tri(g, d - 1))
        memo[mask] = out
        return out

    full = (1 << len(P.vertices)) - 1
    simplices = []
    for s in tri(full, P.dim):
        idx = []
        i = 0
        while s:
            if s & 1:
                idx.append(i)
            s >>= 1
            i += 1
        simplices.append(tuple(idx))
    return Triangulation(P, tuple(sorted(simplices)))


def _coords_in_basis(P: Polytope, basis: LatticeBasis) -> list:
    """Coordinates of P's vertices in an arbitrary lattice basis of Lin(P) ∩ Z^n."""
    if basis.rank != P.dim:
        raise PreconditionError("basis rank differs from dim(P)")
    base = P.vertices[0]
    B = basis.vectors
    gram = [[sum(a * b for a, b in zip(u, v)) for v in B] for u in B]
    out = []
    for x in P.vertices:
        rhs = [sum(a * (xi - bi) for a, xi, bi in zip(u, x, base)) for u in B]
        aug = [[Fraction(g) for g in row] + [Fraction(r)] for row, r in zip(gram, rhs)]
        r = len(B)
        for c in range(r):
            p = next(i for i in range(c, r) if aug[i][c] != 0)
            aug[c], aug[p] = aug[p], aug[c]
            for i in range(r):
                if i != c and aug[i][c]:
                    f = aug[i][c] / aug[c][c]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
        y = tuple(aug[i][r] / aug[i][i] for i in range(r))
        back = [bi + sum(yk * vk[j] for yk, vk in zip(y, B)) for j, bi in enumerate(base)]
        if back != list(x):
            raise PreconditionError("basis does not span Lin(P)")
        out.append(y)
    return out


def normalized_volume(P: Polytope, basis: Optional[LatticeBasis] = None) -> int:
    """Vol(P) as an integer; a point has volume 1.

    ``basis`` optionally replaces the canonical lattice basis of Lin(P) ∩ Z^n
    by another one, which must give the same answer.
    """
    if P is None or not P.vertices:
        raise PreconditionError("the empty face has no volume")
    _require_lattice(P)
    r = P.dim
    if r == 0:
        return 1
    coords = P._coords if basis is None else _coords_in_basis(P, basis)
    total = 0
    for s in triangulate(P).simplices:
        o = coords[s[0]]
        total += abs(det([[a - b for a, b in zip(coords[i], o)] for i in s[1:]]))
    if isinstance(total, Fraction):
        if total.denominator != 1:
            raise ArithmeticError(f"non-integral volume {total}: basis is not a lattice basis")
        total = int(total)
    return total


def _exact_quotient(num: int, den: int, what: str) -> int:
    z, rem = divmod(num, den)
    if rem:
        raise ArithmeticError(f"{what}: {num} is not divisible by {den}")
    return z


def affine_product_factor(P: Polytope, Q: Polytope) -> int:
    """z with Vol(P+Q) = binom(i+j, i) Vol(P) Vol(Q) z, for an affine product."""
    S = minkowski_sum(P, Q)
    i, j = P.dim, Q.dim
    if S.dim != i + j:
        raise NotAffineProduct(f"dim(P+Q) = {S.dim} but dim P + dim Q = {i + j}")
    den = comb(i + j, i) * normalized_volume(P) * normalized_volume(Q)
    return _exact_quotient(normalized_volume(S), den, "affine product")


def join_factor(P: Polytope, Q: Polytope) -> int:
    """z with Vol(conv(P u Q)) = Vol(P) Vol(Q) z, for a join."""
    J = conv_union(P, Q)
    i, j = P.dim, Q.dim
    if J.dim != i + j + 1:
        raise NotJoin(f"dim conv(P u Q) = {J.dim} but dim P + dim Q + 1 = {i + j + 1}")
    den = normalized_volume(P) * normalized_volume(Q)
    return _exact_quotient(normalized_volume(J), den, "join")


def binom_parity(i: int, j: int) -> int:
    """binom(i+j, i) mod 2, by the carry-free criterion."""
    if i < 0 or j < 0:
        raise PreconditionError("binom_parity needs non-negative arguments")
    return 1 if i & j == 0 else 0
