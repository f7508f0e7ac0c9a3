"""Parity certificates for depth lower bounds of integral ReLU networks.

Q_k is the class of lattice polytopes whose faces of dimension >= 2^k all
have even normalized volume. Polytopes reachable with k alternations of
pairwise hulls and Minkowski sums stay in Q_k, while P + simplex leaves it
whenever P is in Q_k and the ambient dimension is 2^k. This module checks
each of those steps on concrete polytopes and assembles them into
replayable JSON certificates.
"""

from __future__ import annotations

import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

from .errors import PreconditionError
from .jsonio import SCHEMA_VERSION, encode_polytope, encode_scalar, encode_vector
from .lattice_volume import affine_product_factor, binom_parity, join_factor, normalized_volume
from .lifting_subdivision import JOIN, PURE_P, subdivide_conv, subdivide_sum, verify_subdivision
from .polytope import Polytope, conv_union, dilate, equal, faces_of_dim_at_least, minkowski_sum, simplex, translate
from .tropical_compiler import (
    Leaf,
    SizeParams,
    compile_network,
    depth,
    eval_network,
    max_tree,
    newton_polytope,
    sample_pk,
    synthesize_network,
    tree_to_json,
)

THREADS_ENV = "NEWTON_DEPTH_THREADS"


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items: list) -> list:
    """Order-preserving map, spread over processes when the env var allows."""
    w = _workers()
    if w <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))


def trial_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


# ---------------------------------------------------------------- Q_k

@dataclass(frozen=True)
class FaceEntry:
    vertices: tuple
    dim: int
    volume: int

    @property
    def parity(self) -> str:
        return "odd" if self.volume % 2 else "even"


@dataclass(frozen=True)
class ParityCertificate:
    polytope: Polytope
    k: int
    entries: tuple
    member: bool
    violation: Optional[FaceEntry]
    mode: str


def check_qk(P: Polytope, k: int, full: bool = True) -> ParityCertificate:
    """Decide membership in Q_k by listing every face of dimension >= 2^k.

    Faces are visited from the top dimension down. With ``full=False`` the
    walk stops at the first odd face.
    """
    if k < 0:
        raise PreconditionError("k must be non-negative")
    if not P.is_lattice:
        raise PreconditionError("Q_k membership is defined for lattice polytopes")
    t = 1 << k
    if P.dim < t:
        return ParityCertificate(P, k, (), True, None, "full" if full else "short")
    entries = []
    violation = None
    for face in faces_of_dim_at_least(P, t):
        e = FaceEntry(face.polytope.vertices, face.dim, normalized_volume(face.polytope))
        entries.append(e)
        if e.volume % 2 and violation is None:
            violation = e
            if not full:
                break
    return ParityCertificate(P, k, tuple(entries), violation is None, violation, "full" if full else "short")


def certificate_to_json(c: ParityCertificate) -> dict:
    def entry(e):
        return {"vertices": [encode_vector(v) for v in e.vertices], "dim": e.dim,
                "volume": encode_scalar(e.volume), "parity": e.parity}

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "qk_membership",
        "k": c.k,
        "threshold_dim": 1 << c.k,
        "polytope": encode_polytope(c.polytope),
        "mode": c.mode,
        "entries": [entry(e) for e in c.entries],
        "verdict": "member" if c.member else "non-member",
        "first_violation": entry(c.violation) if c.violation else None,
    }


# ---------------------------------------------------------------- closure lemmas

@dataclass
class LemmaAudit:
    lemma: str
    k: int
    applies: bool
    preconditions_ok: bool
    dim: int
    volume: Optional[int] = None
    even: Optional[bool] = None
    cells: list = field(default_factory=list)
    subdivision_ok: Optional[bool] = None
    consistent: Optional[bool] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        if not self.preconditions_ok:
            return False
        if not self.applies:
            return True
        return bool(self.even and self.subdivision_ok and self.consistent)


def _even_reason(F, G, i, j, t, kind):
    """Why a cell's volume is even, or None if no reason applies."""
    if F is not None and i >= t and normalized_volume(F) % 2 == 0:
        return f"Vol(F) even (dim F = {i} >= {t})"
    if G is not None and j >= t and normalized_volume(G) % 2 == 0:
        return f"Vol(G) even (dim G = {j} >= {t})"
    if kind == "product" and binom_parity(i, j) == 0:
        return f"binom({i + j}, {i}) even"
    return None


def check_lemma_sum(P: Polytope, Q: Polytope, k: int, seed: int = 0) -> LemmaAudit:
    """Audit: P, Q in Q_k and dim(P+Q) >= 2^k imply Vol(P+Q) even, cell by cell."""
    t = 1 << k
    S = minkowski_sum(P, Q)
    pre = check_qk(P, k, full=False).member and check_qk(Q, k, full=False).member
    audit = LemmaAudit("sum", k, S.dim >= t, pre, S.dim)
    if not pre:
        audit.note = "precondition violated: an input is not in Q_k"
        return audit
    if not audit.applies:
        audit.note = "lemma precondition not met, no claim"
        return audit
    audit.volume = normalized_volume(S)
    audit.even = audit.volume % 2 == 0
    sub = subdivide_sum(P, Q, seed)
    audit.subdivision_ok = verify_subdivision(sub).passed
    ok = True
    for cell in sub.cells:
        i, j = cell.F.dim, cell.G.dim
        z = affine_product_factor(cell.F, cell.G)
        exact = cell.volume == z * comb(i + j, i) * normalized_volume(cell.F) * normalized_volume(cell.G)
        reason = _even_reason(cell.F, cell.G, i, j, t, "product")
        ok = ok and exact and reason is not None and cell.volume % 2 == 0
        audit.cells.append({"dims": [i, j], "volume": cell.volume, "factor": z, "reason": reason})
    audit.consistent = ok and sum(c.volume for c in sub.cells) == audit.volume
    return audit


def check_lemma_conv(P: Polytope, Q: Polytope, k: int, seed: int = 0) -> LemmaAudit:
    """Audit: P, Q in Q_k and dim conv(P u Q) >= 2^(k+1) imply an even volume."""
    t = 1 << k
    J = conv_union(P, Q)
    pre = check_qk(P, k, full=False).member and check_qk(Q, k, full=False).member
    audit = LemmaAudit("conv", k, J.dim >= 2 * t, pre, J.dim)
    if not pre:
        audit.note = "precondition violated: an input is not in Q_k"
        return audit
    if not audit.applies:
        audit.note = "lemma precondition not met, no claim"
        return audit
    audit.volume = normalized_volume(J)
    audit.even = audit.volume % 2 == 0
    sub = subdivide_conv(P, Q, seed)
    audit.subdivision_ok = verify_subdivision(sub).passed
    ok = True
    for cell in sub.cells:
        if cell.kind == JOIN:
            i, j = cell.F.dim, cell.G.dim
            z = join_factor(cell.F, cell.G)
            exact = cell.volume == z * normalized_volume(cell.F) * normalized_volume(cell.G)
            reason = _even_reason(cell.F, cell.G, i, j, t, JOIN)
        else:
            face = cell.F if cell.kind == PURE_P else cell.G
            i = j = None
            z = None
            exact = True
            reason = f"face of dim {face.dim} >= {t} has even volume" if face.dim >= t and cell.volume % 2 == 0 else None
        ok = ok and exact and reason is not None and cell.volume % 2 == 0
        audit.cells.append({"kind": cell.kind, "dims": [i, j], "volume": cell.volume, "factor": z, "reason": reason})
    audit.consistent = ok and sum(c.volume for c in sub.cells) == audit.volume
    return audit


def lemma_audit_to_json(a: LemmaAudit) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": f"lemma_{a.lemma}",
        "k": a.k,
        "dim": a.dim,
        "preconditions_ok": a.preconditions_ok,
        "applies": a.applies,
        "volume": None if a.volume is None else encode_scalar(a.volume),
        "even": a.even,
        "subdivision_ok": a.subdivision_ok,
        "consistent": a.consistent,
        "cells": a.cells,
        "note": a.note,
        "passed": a.passed,
    }


# ---------------------------------------------------------------- P_k in Q_k

def default_size(k: int, n: int) -> SizeParams:
    return SizeParams(coord_bound=2, max_terms=3) if k <= 1 and n <= 2 else SizeParams(coord_bound=1, max_terms=2)


@dataclass(frozen=True)
class EvenTrial:
    index: int
    seed: int
    tree: object
    polytope: Polytope
    certificate: ParityCertificate


@dataclass(frozen=True)
class EvenBatch:
    k: int
    n: int
    seed: int
    size: SizeParams
    trials: tuple

    @property
    def members(self) -> int:
        return sum(t.certificate.member for t in self.trials)

    @property
    def passed(self) -> bool:
        return self.members == len(self.trials)


def _even_trial(args):
    index, k, n, size, s = args
    tree, P = sample_pk(k, n, size, s)
    return EvenTrial(index, s, tree, P, check_qk(P, k, full=False))


def verify_thm_even(k: int, n: int, trials: int, seed: int, size: Optional[SizeParams] = None) -> EvenBatch:
    """Sample P_k members and check that each lies in Q_k."""
    if not (0 <= k <= 2 and 1 <= n <= 5 and 0 <= trials <= 1000):
        raise PreconditionError("desk-scale bounds: k <= 2, n <= 5, trials <= 1000")
    size = size or default_size(k, n)
    jobs = [(i, k, n, size, trial_seed(seed, i)) for i in range(trials)]
    return EvenBatch(k, n, seed, size, tuple(_parallel_map(_even_trial, jobs)))


def even_batch_to_json(b: EvenBatch) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "pk_in_qk_batch",
        "k": b.k,
        "n": b.n,
        "seed": b.seed,
        "size": {"coord_bound": b.size.coord_bound, "max_terms": b.size.max_terms},
        "trials": [
            {"index": t.index, "seed": t.seed, "tree_depth": depth(t.tree),
             "polytope": encode_polytope(t.polytope), "dim": t.polytope.dim,
             "verdict": "member" if t.certificate.member else "non-member"}
            for t in b.trials
        ],
        "members": b.members,
        "total": len(b.trials),
        "passed": b.passed,
    }


# ---------------------------------------------------------------- obstruction

@dataclass(frozen=True)
class ObstructionReport:
    polytope: Polytope
    k: int
    sum_polytope: Polytope
    volume: int
    subdivision: object
    audit_passed: bool
    odd_cells: tuple
    located: bool

    @property
    def odd(self) -> bool:
        return self.volume % 2 == 1

    @property
    def passed(self) -> bool:
        return self.odd and self.audit_passed and self.located


def parity_obstruction(P: Polytope, k: int, seed: int = 0) -> ObstructionReport:
    """Vol(P + simplex) is odd for P in Q_k in dimension 2^k; find the odd cell.

    In the subdivision of P + simplex every cell F + G has even volume
    except the one where F is a vertex of P and G is the whole simplex,
    which is a translated unimodular simplex.
    """
    n = 1 << k
    if P.ambient != n:
        raise PreconditionError(f"P must live in R^{n}")
    if not check_qk(P, k, full=False).member:
        raise PreconditionError("P is not in Q_k")
    D = simplex(n)
    sub = subdivide_sum(P, D, seed)
    rep = verify_subdivision(sub)
    odd = tuple(c for c in sub.cells if c.volume % 2)
    located = False
    if len(odd) == 1:
        c = odd[0]
        located = (c.volume == 1 and c.F.dim == 0 and equal(c.G, D)
                   and equal(c.polytope, translate(D, c.F.vertices[0])))
    return ObstructionReport(P, k, sub.target, normalized_volume(sub.target), sub, rep.passed, odd, located)


def obstruction_to_json(r: ObstructionReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "parity_obstruction",
        "k": r.k,
        "polytope": encode_polytope(r.polytope),
        "sum_polytope": encode_polytope(r.sum_polytope),
        "volume": encode_scalar(r.volume),
        "parity": "odd" if r.odd else "even",
        "lift": {"alpha": encode_vector(r.subdivision.lift.alpha),
                 "beta": encode_scalar(r.subdivision.lift.beta),
                 "seed": r.subdivision.lift.seed, "retries": r.subdivision.lift.retries},
        "cells": len(r.subdivision.cells),
        "subdivision_audit": "pass" if r.audit_passed else "fail",
        "odd_cells": [
            {"vertices": [encode_vector(v) for v in c.polytope.vertices], "volume": encode_scalar(c.volume),
             "F": [encode_vector(v) for v in c.F.vertices], "G": [encode_vector(v) for v in c.G.vertices]}
            for c in r.odd_cells
        ],
        "unique_odd_cell_located": r.located,
        "passed": r.passed,
    }


# ---------------------------------------------------------------- full certificate

def _random_points(n: int, count: int, rng: random.Random) -> list:
    return [tuple(Fraction(rng.randint(-50, 50), rng.randint(1, 9)) for _ in range(n)) for _ in range(count)]


def max_network_check(n: int, seed: int, points: int = 100) -> dict:
    """Synthesize a net for max{0, x_1..x_n}, evaluate it, compile it back."""
    tree = max_tree(n)
    net = synthesize_network(tree, Leaf((0,) * n))
    rng = random.Random(seed)
    agree = 0
    pts = _random_points(n, points, rng)
    for x in pts:
        agree += eval_network(net, x)[0] == max([0] + list(x))
    pair = compile_network(net)[0]
    C = newton_polytope(pair)
    return {
        "n": n,
        "tree": tree_to_json(tree),
        "tree_depth": depth(tree),
        "hidden_layers": net.hidden_layers,
        "widths": net.widths,
        "layers": [[list(r) for r in A] for A in net.layers],
        "eval_points": points,
        "eval_agree": agree,
        "compiled_pos_vertices": len(pair.pos.vertices),
        "compiled_neg_vertices": len(pair.neg.vertices),
        "newton_polytope": encode_polytope(C),
        "newton_polytope_is_simplex": equal(C, simplex(n)),
        "passed": agree == points and equal(C, simplex(n)) and net.hidden_layers == depth(tree),
    }


def _obstruction_job(args):
    P, k, s = args
    return obstruction_to_json(parity_obstruction(P, k, s))


def certify_non_representability(k: int, seed: int = 0, trials: Optional[int] = None,
                                 size: Optional[SizeParams] = None) -> dict:
    """Certificate that max{0, x_1, ..., x_n}, n = 2^k, needs more than k hidden layers.

    Steps: the function's Newton polytope is the standard simplex (checked
    on a synthesized (k+1)-layer network); sampled P_k members lie in Q_k;
    for each of them P + simplex has odd volume, so it is outside Q_k.
    """
    if not 0 <= k <= 2:
        raise PreconditionError("certify supports k in {0, 1, 2}")
    n = 1 << k
    if trials is None:
        trials = {0: 10, 1: 100, 2: 25}[k]
    steps = {}
    steps["newton_polytope"] = max_network_check(n, seed)
    batch = verify_thm_even(k, n, trials, seed, size)
    steps["pk_in_qk"] = even_batch_to_json(batch)
    jobs = [(t.polytope, k, t.seed) for t in batch.trials if t.certificate.member]
    obstructions = _parallel_map(_obstruction_job, jobs)
    steps["parity_obstruction"] = {
        "checked": len(obstructions),
        "odd": sum(o["parity"] == "odd" for o in obstructions),
        "located": sum(o["unique_odd_cell_located"] for o in obstructions),
        "reports": obstructions,
        "passed": all(o["passed"] for o in obstructions) and len(obstructions) == batch.members,
    }
    if k == 0:
        # a linear map satisfies f(1) + f(-1) = 0
        values = [max(0, x) for x in (1, -1)]
        steps["linear_maps"] = {
            "statement": "with 0 hidden layers an integral network is linear; max{0, x_1} is not linear",
            "witness_points": [[1], [-1]],
            "values": values,
            "passed": values[0] + values[1] != 0,
        }
    passed = all(s["passed"] for s in steps.values())
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "non_representability",
        "function": f"max{{0, x_1, ..., x_{n}}}",
        "k": k,
        "n": n,
        "seed": seed,
        "trials": trials,
        "claim": f"no integral ReLU network with {k} hidden layers computes the function; "
                 f"one with {k + 1} hidden layers does",
        "machine_checked": [
            f"the synthesized {k + 1}-hidden-layer network computes the function on the listed points "
            "and its Newton polytope is the standard simplex",
            f"every sampled polytope built with {k} alternations of hulls and sums has only even-volume "
            f"faces in dimension >= {n}",
            "for every such sampled P, P + simplex has odd volume, with the odd cell located and audited",
        ],
        "not_machine_checked": "the inclusion of all depth-k polytopes in the even-volume class is a "
                               "general theorem; only the sampled instances are checked here",
        "steps": steps,
        "verdict": "certified" if passed else "failed",
    }


def explore_double_simplex(k: int) -> dict:
    """Parity data for 2 * simplex in dimension 2^k, reported without interpretation."""
    n = 1 << k
    P = dilate(simplex(n), 2)
    cert = check_qk(P, k)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "exploratory_double_simplex",
        "k": k,
        "n": n,
        "polytope": encode_polytope(P),
        "volume": encode_scalar(normalized_volume(P)),
        "qk_membership": "member" if cert.member else "non-member",
        "note": "even parity does not obstruct; no representability claim is made",
    }
