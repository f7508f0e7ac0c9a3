"""Regular subdivisions of P + Q and conv(P u Q) from generic lifts.

Q is lifted by an integer height function q -> alpha . q + beta while P
stays at height zero. Projecting the lower facets of the lifted sum (or
lifted union) gives a subdivision of the target whose cells are affine
products F + G (for sums) or joins conv(F u G) (for unions) of faces of P
and Q. Genericity of (alpha, beta) is checked on the cells actually built;
a failed check triggers a resample with a doubled range.

Every cell records an affine function l(x) = level - witness . x, the
height of its lower facet. Those functions are what the audit uses to
certify that cell interiors are disjoint.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

from . import _hull
from .errors import GenericityFailure, PreconditionError
from .exact_linalg import nullspace, rank
from .lattice_volume import normalized_volume
from .polytope import (
    Polytope,
    _check_caps,
    _scalar,
    argmin_face,
    in_halfspaces,
    conv_union,
    equal,
    from_points,
    minkowski_sum,
)

MAX_RETRIES = 32
INITIAL_RANGE = 8

SUM = "sum"
CONV = "conv"

PRODUCT = "product"
JOIN = "join"
PURE_P = "pure-P"
PURE_Q = "pure-Q"


@dataclass(frozen=True)
class Lift:
    alpha: tuple
    beta: int
    seed: int
    retries: int


@dataclass(frozen=True)
class Cell:
    polytope: Polytope
    kind: str
    F: Optional[Polytope]
    G: Optional[Polytope]
    witness: tuple
    level: object
    volume: int


@dataclass(frozen=True)
class Subdivision:
    target: Polytope
    operation: str
    P: Polytope
    Q: Polytope
    cells: tuple
    lift: Lift


@dataclass
class AuditReport:
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def record(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = self.checks.get(name, True) and ok
        if not ok:
            self.failures.append(f"{name}: {detail}")


class _NotGeneric(Exception):
    pass


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _frac_vec(v) -> tuple:
    return tuple(_scalar(x) for x in v)


def lower_faces(points) -> list:
    """Lower facets of the lifted configuration ``points`` in R^(m+1).

    The last coordinate is the height. A facet is lower when it lies over a
    full-dimensional piece of the projection. Returns (face vertices, c)
    pairs where the face minimises (c, 1); c is a rational vector of
    length m. Rational input is accepted.
    """
    pts = sorted({_frac_vec(p) for p in points})
    if not pts:
        raise PreconditionError("lower_faces needs at least one point")
    if len(pts[0]) < 2:
        raise PreconditionError("a lifted point needs at least two coordinates")
    scale = 1
    for p in pts:
        for x in p:
            scale = scale * x.denominator // gcd(scale, x.denominator)
    scaled = {tuple(int(x * scale) for x in p): p for p in pts}
    lifted = sorted((y[:-1], y[-1]) for y in scaled)
    base = from_points([x for x, _ in lifted])
    out = []
    for cell, c, level in _lower_cells(base, lifted):
        on = set(cell)
        verts = tuple(sorted(scaled[x + (h,)] for x, h in lifted if x in on and h == level - _dot(c, x)))
        out.append((verts, c))
    return sorted(out)


def _lifted_points(P: Polytope, Q: Polytope, op: str, alpha, beta) -> list:
    """(ambient point, height) pairs of the lifted configuration."""
    if op == SUM:
        out = set()
        for p in P.vertices:
            for q in Q.vertices:
                out.add((tuple(a + b for a, b in zip(p, q)), _dot(alpha, q) + beta))
    else:
        out = {(p, 0) for p in P.vertices}
        out |= {(q, _dot(alpha, q) + beta) for q in Q.vertices}
    return sorted(out)


def _lower_cells(target: Polytope, lifted: list) -> list:
    """(ambient cell points, witness c, level b) for each lower facet."""
    frame = target.frame
    r = frame.rank
    coords = [frame.forward(x) + (h,) for x, h in lifted]
    if r == 0:
        lo = min(h for _, h in lifted)
        pts = [x for x, h in lifted if h == lo]
        return [(pts, (0,) * target.ambient, lo)]
    base = coords[0]
    diffs = [[a - b for a, b in zip(y, base)] for y in coords[1:]]
    if rank(diffs) == r:
        # heights are affine on the target: one flat cell
        u = nullspace(diffs, ncols=r + 1)[0]
        cprime = tuple(Fraction(x, u[-1]) for x in u[:-1])
        facets = [(cprime, list(range(len(lifted))))]
    else:
        facets = []
        for f in _hull.hull_facets(coords, lower=True):
            s = f.normal[-1]
            facets.append((tuple(Fraction(x, s) for x in f.normal[:-1]), _hull.indices(f.mask)))
    out = []
    for cprime, idx in facets:
        c = _frac_vec(frame.pullback(cprime))
        x0, h0 = lifted[idx[0]]
        level = _scalar(_dot(c, x0) + h0)
        out.append(([lifted[i][0] for i in idx], c, level))
    return out


def _build_cells(P: Polytope, Q: Polytope, op: str, target: Polytope, alpha, beta) -> list:
    lifted = _lifted_points(P, Q, op, alpha, beta)
    _check_caps(target.ambient + 1, n_candidates=len(lifted))
    r = target.dim
    cells = []
    for pts, c, level in _lower_cells(target, lifted):
        C = from_points(pts)
        if C.dim != r:
            raise _NotGeneric("lower facet projects to a lower-dimensional cell")
        cq = tuple(a + b for a, b in zip(c, alpha))
        if op == SUM:
            F, G = argmin_face(P, c), argmin_face(Q, cq)
            if F.dim + G.dim != r or not equal(minkowski_sum(F, G), C):
                raise _NotGeneric("cell is not an affine product of its provenance faces")
            kind = PRODUCT
        else:
            mp = min(_dot(c, p) for p in P.vertices)
            mq = min(_dot(cq, q) for q in Q.vertices) + beta
            F = argmin_face(P, c) if mp <= mq else None
            G = argmin_face(Q, cq) if mq <= mp else None
            if F is not None and G is not None:
                if F.dim + G.dim + 1 != r or not equal(conv_union(F, G), C):
                    raise _NotGeneric("mixed cell is not a join of its provenance faces")
                kind = JOIN
            else:
                kind = PURE_P if F is not None else PURE_Q
                if not equal(F if F is not None else G, C):
                    raise _NotGeneric("pure cell differs from its provenance face")
        cells.append(Cell(C, kind, F, G, c, level, normalized_volume(C)))
    return sorted(cells, key=lambda cell: cell.polytope.vertices)


def _target(P: Polytope, Q: Polytope, op: str) -> Polytope:
    if P.ambient != Q.ambient:
        raise PreconditionError(f"ambient dimensions differ: {P.ambient} vs {Q.ambient}")
    if op == SUM:
        return minkowski_sum(P, Q)
    if op == CONV:
        return conv_union(P, Q)
    raise PreconditionError(f"unknown operation {op!r}")


def _search(P: Polytope, Q: Polytope, op: str, seed: int):
    target = _target(P, Q, op)
    rng = random.Random(seed)
    R = INITIAL_RANGE
    for attempt in range(MAX_RETRIES):
        alpha = tuple(rng.randint(-R, R) for _ in range(P.ambient))
        beta = rng.randint(-R, R)
        try:
            cells = _build_cells(P, Q, op, target, alpha, beta)
        except _NotGeneric:
            R *= 2
            continue
        return target, Lift(alpha, beta, seed, attempt), cells
    raise GenericityFailure(f"no generic lift after {MAX_RETRIES} attempts (seed {seed})")


def choose_generic_lift(P: Polytope, Q: Polytope, seed: int, operation: str = SUM) -> Lift:
    """Sample integer (alpha, beta) until the resulting cells pass the structural checks."""
    return _search(P, Q, operation, seed)[1]


def subdivide_sum(P: Polytope, Q: Polytope, seed: int) -> Subdivision:
    target, lift, cells = _search(P, Q, SUM, seed)
    return Subdivision(target, SUM, P, Q, tuple(cells), lift)


def subdivide_conv(P: Polytope, Q: Polytope, seed: int) -> Subdivision:
    target, lift, cells = _search(P, Q, CONV, seed)
    return Subdivision(target, CONV, P, Q, tuple(cells), lift)


def subdivide_with_lift(P: Polytope, Q: Polytope, operation: str, alpha, beta) -> Subdivision:
    """Rebuild the subdivision for a recorded lift; raises GenericityFailure if it is not generic."""
    target = _target(P, Q, operation)
    alpha = tuple(int(a) for a in alpha)
    try:
        cells = _build_cells(P, Q, operation, target, alpha, int(beta))
    except _NotGeneric as exc:
        raise GenericityFailure(str(exc)) from exc
    return Subdivision(target, operation, P, Q, tuple(cells), Lift(alpha, int(beta), -1, 0))


def verify_subdivision(S: Subdivision) -> AuditReport:
    """Audit a subdivision independently of how it was built.

    Checks: volumes add up; cells lie in the target; cell interiors are
    disjoint, certified by the cell height functions l_i (each l_i
    dominates every l_j on the vertices of cell i, and no two l_i agree on
    all vertices of the target); kinds match dimensions; provenance faces
    are the faces selected by the witness and rebuild the cell.
    """
    rep = AuditReport()
    T = S.target
    r = T.dim
    cells = list(S.cells)
    alpha = tuple(S.lift.alpha)

    vols = [normalized_volume(c.polytope) for c in cells]
    rep.record("recorded_volumes", vols == [c.volume for c in cells], "recorded cell volume is wrong")
    total, expected = sum(vols), normalized_volume(T)
    rep.record("volume_additivity", total == expected, f"cells sum to {total}, target has {expected}")

    for k, c in enumerate(cells):
        inside = c.polytope.ambient == T.ambient and all(
            in_halfspaces(T, v) for v in c.polytope.vertices if v not in T.vertices
        )
        rep.record("cells_in_target", inside, f"cell {k} leaves the target")
        rep.record("full_dimensional", c.polytope.dim == r, f"cell {k} has dim {c.polytope.dim}")

    points = sorted({v for c in cells for v in c.polytope.vertices})
    where = {v: k for k, v in enumerate(points)}
    heights = [[c.level - _dot(c.witness, v) for v in points] for c in cells]
    for i, ci in enumerate(cells):
        own = [where[v] for v in ci.polytope.vertices]
        hi = heights[i]
        for j, hj in enumerate(heights):
            if i != j and any(hj[v] > hi[v] for v in own):
                rep.record("interiors_disjoint", False, f"height of cell {j} exceeds cell {i} on cell {i}")
    signatures = {}
    for k, c in enumerate(cells):
        sig = tuple(c.level - _dot(c.witness, v) for v in T.vertices)
        if sig in signatures:
            rep.record("interiors_disjoint", False, f"cells {signatures[sig]} and {k} share a height function")
        signatures[sig] = k

    for k, c in enumerate(cells):
        C = c.polytope
        cq = tuple(a + b for a, b in zip(c.witness, alpha))
        if S.operation == SUM:
            ok_kind = c.kind == PRODUCT and c.F is not None and c.G is not None
            ok_kind = ok_kind and c.F.dim + c.G.dim == C.dim
            rep.record("kind_dimension", ok_kind, f"cell {k} fails dim F + dim G = dim C")
            ok_prov = ok_kind and equal(argmin_face(S.P, c.witness), c.F) and equal(argmin_face(S.Q, cq), c.G)
            ok_prov = ok_prov and equal(minkowski_sum(c.F, c.G), C)
            rep.record("provenance", ok_prov, f"cell {k} is not F_c + G_c")
        else:
            if c.kind == JOIN:
                ok_kind = c.F is not None and c.G is not None and c.F.dim + c.G.dim + 1 == C.dim
                rebuilt = conv_union(c.F, c.G) if ok_kind else None
            elif c.kind == PURE_P:
                ok_kind = c.F is not None and c.G is None
                rebuilt = c.F
            elif c.kind == PURE_Q:
                ok_kind = c.G is not None and c.F is None
                rebuilt = c.G
            else:
                ok_kind, rebuilt = False, None
            rep.record("kind_dimension", ok_kind, f"cell {k} has inconsistent kind {c.kind}")
            ok_prov = ok_kind and equal(rebuilt, C)
            if ok_prov and c.F is not None:
                ok_prov = equal(argmin_face(S.P, c.witness), c.F)
            if ok_prov and c.G is not None:
                ok_prov = equal(argmin_face(S.Q, cq), c.G)
            rep.record("provenance", ok_prov, f"cell {k} is not rebuilt from its faces")
    for name in ("interiors_disjoint", "kind_dimension", "provenance", "cells_in_target", "full_dimensional"):
        rep.checks.setdefault(name, True)
    return rep


def to_json(S: Subdivision) -> dict:
    from .jsonio import encode_polytope, encode_scalar, encode_vector

    def face(F):
        return None if F is None else [encode_vector(v) for v in F.vertices]

    return {
        "operation": S.operation,
        "target": encode_polytope(S.target),
        "P": encode_polytope(S.P),
        "Q": encode_polytope(S.Q),
        "alpha": encode_vector(S.lift.alpha),
        "beta": encode_scalar(S.lift.beta),
        "seed": S.lift.seed,
        "retries": S.lift.retries,
        "cells": [
            {
                "kind": c.kind,
                "vertices": [encode_vector(v) for v in c.polytope.vertices],
                "F": face(c.F),
                "G": face(c.G),
                "witness": encode_vector(c.witness),
                "level": encode_scalar(c.level),
                "volume": encode_scalar(c.volume),
            }
            for c in S.cells
        ],
    }


def from_json(data: dict) -> Subdivision:
    from .errors import SchemaError
    from .jsonio import decode_polytope, decode_scalar, decode_vector

    try:
        P = decode_polytope(data["P"])
        Q = decode_polytope(data["Q"])
        cells = []
        for c in data["cells"]:
            F = None if c["F"] is None else from_points([decode_vector(v) for v in c["F"]])
            G = None if c["G"] is None else from_points([decode_vector(v) for v in c["G"]])
            cells.append(Cell(
                from_points([decode_vector(v) for v in c["vertices"]]),
                c["kind"], F, G,
                decode_vector(c["witness"]),
                decode_scalar(c["level"]),
                decode_scalar(c["volume"]),
            ))
        lift = Lift(decode_vector(data["alpha"]), decode_scalar(data["beta"]), data["seed"], data["retries"])
        return Subdivision(decode_polytope(data["target"]), data["operation"], P, Q, tuple(cells), lift)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad subdivision JSON: {exc}") from exc
