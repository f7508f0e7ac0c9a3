"""Exact integer and rational linear algebra.

Scalars are Python ``int`` and :class:`fractions.Fraction`; matrices are
row-major sequences of sequences. Nothing in here ever rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

Vector = tuple
Matrix = Sequence[Sequence]


@dataclass(frozen=True)
class LatticeBasis:
    """Linearly independent integer vectors generating a lattice in Z^ambient."""

    vectors: tuple
    ambient: int

    def __post_init__(self):
        vecs = tuple(tuple(int(x) for x in v) for v in self.vectors)
        for v in vecs:
            if len(v) != self.ambient:
                raise ValueError(f"basis vector {v} not in dimension {self.ambient}")
        object.__setattr__(self, "vectors", vecs)

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def as_columns(self) -> list:
        """The n x r matrix whose columns are the basis vectors."""
        return [[v[i] for v in self.vectors] for i in range(self.ambient)]


def identity(n: int) -> list:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(M: Matrix) -> list:
    return [list(col) for col in zip(*M)]


def matmul(A: Matrix, B: Matrix) -> list:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A: Matrix, v: Sequence) -> list:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def _shape(M: Matrix) -> tuple:
    rows = len(M)
    cols = len(M[0]) if rows else 0
    for row in M:
        if len(row) != cols:
            raise ValueError("ragged matrix")
    return rows, cols


def _is_integral(M: Matrix) -> bool:
    return all(isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1)
               for row in M for x in row)


def det(M: Matrix):
    """Exact determinant.

    Integer matrices use Bareiss fraction-free elimination and return an
    ``int``; anything else goes through Fraction elimination.
    """
    n, m = _shape(M)
    if n != m:
        raise ValueError(f"det of non-square {n}x{m} matrix")
    if n == 0:
        return 1
    if _is_integral(M):
        return _bareiss_det([[int(x) for x in row] for row in M])
    A = [[Fraction(x) for x in row] for row in M]
    sign = 1
    result = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        p = A[k][k]
        result *= p
        for i in range(k + 1, n):
            f = A[i][k] / p
            if f:
                Ai, Ak = A[i], A[k]
                for j in range(k + 1, n):
                    Ai[j] -= f * Ak[j]
    return sign * result


def _bareiss_det(A: list) -> int:
    n = len(A)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if piv is None:
                return 0
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        akk = A[k][k]
        Ak = A[k]
        for i in range(k + 1, n):
            Ai = A[i]
            aik = Ai[k]
            for j in range(k + 1, n):
                Ai[j] = (Ai[j] * akk - aik * Ak[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


def rref(M: Matrix) -> tuple:
    """Reduced row echelon form over Q; returns (rows, pivot_columns)."""
    A = [[Fraction(x) for x in row] for row in M]
    rows, cols = _shape(A)
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        A[r] = [x / p for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


def rank(M: Matrix) -> int:
    if not M:
        return 0
    if _is_integral(M):
        return _integer_rank([list(map(int, row)) for row in M])
    return len(rref(M)[1])


def _integer_rank(A: list) -> int:
    """Fraction-free elimination on a copy of an integer matrix."""
    rows, cols = len(A), len(A[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        for i in range(r + 1, rows):
            f = A[i][c]
            if f:
                row = [p * x - f * y for x, y in zip(A[i], A[r])]
                g = 0
                for x in row:
                    g = gcd(g, x)
                A[i] = [x // g for x in row] if g > 1 else row
        r += 1
        if r == rows:
            break
    return r


def nullspace(M: Matrix, ncols: Optional[int] = None) -> list:
    """Basis of the rational right kernel of M, scaled to primitive integer vectors.

    ``ncols`` is needed when M has no rows.
    """
    if not M:
        if ncols is None:
            raise ValueError("ncols required for an empty matrix")
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    R, pivots = rref(M)
    n = len(M[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(primitive(v))
    return basis


def primitive(v: Sequence) -> tuple:
    """Scale a rational vector to the primitive integer vector in the same direction."""
    v = [Fraction(x) for x in v]
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def xgcd(a: int, b: int) -> tuple:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def hnf(M: Matrix) -> tuple:
    """Column-style Hermite normal form.

    Returns ``(H, U)`` with ``M @ U == H``, ``U`` unimodular, and ``H`` lower
    column-echelon: each pivot is positive and the entries to its left in
    the pivot row lie in ``[0, pivot)``. Zero columns are pushed to the right.
    """
    m, n = _shape(M)
    if not _is_integral(M):
        raise ValueError("hnf needs an integer matrix")
    H = [[int(x) for x in row] for row in M]
    U = identity(n)
    pc = 0

    def colop(p, j, s, t, u, v):
        # (col_p, col_j) <- (s*col_p + t*col_j, u*col_p + v*col_j)
        for mat in (H, U):
            for row in mat:
                a, b = row[p], row[j]
                row[p] = s * a + t * b
                row[j] = u * a + v * b

    for i in range(m):
        if pc >= n:
            break
        for j in range(pc + 1, n):
            b = H[i][j]
            if b == 0:
                continue
            a = H[i][pc]
            g, s, t = xgcd(a, b)
            colop(pc, j, s, t, -b // g, a // g)
        p = H[i][pc]
        if p == 0:
            continue
        if p < 0:
            for mat in (H, U):
                for row in mat:
                    row[pc] = -row[pc]
            p = -p
        for j in range(pc):
            q = H[i][j] // p
            if q:
                for mat in (H, U):
                    for row in mat:
                        row[j] -= q * row[pc]
        pc += 1
    return H, U


def _pivot_columns(H: list) -> list:
    """(column, pivot_row) pairs of a column-echelon matrix."""
    out = []
    rows = len(H)
    cols = len(H[0]) if rows else 0
    for c in range(cols):
        r = next((i for i in range(rows) if H[i][c] != 0), None)
        if r is None:
            break
        out.append((c, r))
    return out


def in_lattice(v: Sequence, B: LatticeBasis) -> bool:
    """Is the integer vector v an integer combination of B's vectors?"""
    if len(v) != B.ambient:
        raise ValueError(f"vector of length {len(v)} vs lattice in dimension {B.ambient}")
    if any(Fraction(x).denominator != 1 for x in v):
        return False
    residual = [int(x) for x in v]
    if B.rank == 0:
        return not any(residual)
    H, _ = hnf(B.as_columns())
    for c, r in _pivot_columns(H):
        if any(residual[:r]):
            return False
        q, rem = divmod(residual[r], H[r][c])
        if rem:
            return False
        if q:
            for i in range(r, len(residual)):
                residual[i] -= q * H[i][c]
    return not any(residual)


def _canonical_basis(vectors: list, n: int) -> LatticeBasis:
    if not vectors:
        return LatticeBasis((), n)
    cols = [[v[i] for v in vectors] for i in range(n)]
    H, _ = hnf(cols)
    pcs = _pivot_columns(H)
    return LatticeBasis(tuple(tuple(H[i][c] for i in range(n)) for c, _ in pcs), n)


def kernel_lattice_basis(A: Matrix, ncols: Optional[int] = None) -> LatticeBasis:
    """Lattice basis of {x in Z^n : A x = 0}.

    The result generates the full saturated lattice, not a finite-index
    sublattice, and is returned in Hermite-reduced form.
    """
    if not A:
        if ncols is None:
            raise ValueError("ncols required for an empty matrix")
        return LatticeBasis(tuple(tuple(int(i == j) for j in range(ncols)) for i in range(ncols)), ncols)
    n = len(A[0])
    rows = [primitive(row) for row in A]
    H, U = hnf(rows)
    used = len(_pivot_columns(H))
    kernel = [[U[i][c] for i in range(n)] for c in range(used, n)]
    return _canonical_basis(kernel, n)


def lin_lattice_basis(points: Sequence[Sequence]) -> LatticeBasis:
    """Lattice basis of Lin(points) ∩ Z^n, where Lin is the affine hull moved to the origin."""
    if not points:
        raise ValueError("lin_lattice_basis needs at least one point")
    n = len(points[0])
    p0 = points[0]
    diffs = [[Fraction(a) - Fraction(b) for a, b in zip(p, p0)] for p in points[1:]]
    diffs = [d for d in diffs if any(d)]
    if not diffs:
        return LatticeBasis((), n)
    complement = nullspace(diffs)
    if not complement:
        return kernel_lattice_basis([], ncols=n)
    return kernel_lattice_basis(complement)


def solve_lower_echelon(B: LatticeBasis, x: Sequence) -> Optional[tuple]:
    """Coordinates y with sum y_i b_i == x for a Hermite-reduced basis, or None."""
    H = B.as_columns()
    residual = [Fraction(v) for v in x]
    coords = []
    for c, r in _pivot_columns(H) if B.rank else []:
        q = residual[r] / H[r][c]
        coords.append(q)
        if q:
            for i in range(r, len(residual)):
                residual[i] -= q * H[i][c]
    if any(residual):
        return None
    return tuple(coords)


def convex_combination(points: Sequence[Sequence], x: Sequence) -> Optional[tuple]:
    """Find lambda >= 0 with sum lambda_i = 1 and sum lambda_i p_i = x.

    Phase-one simplex in exact arithmetic with Bland's rule. Returns the
    coefficients, or None when x is outside conv(points).
    """
    if not points:
        return None
    n = len(x)
    N = len(points)
    # equality rows: coordinates then the affine constraint
    A = [[Fraction(p[i]) for p in points] for i in range(n)] + [[Fraction(1)] * N]
    b = [Fraction(v) for v in x] + [Fraction(1)]
    m = len(A)
    for i in range(m):
        if b[i] < 0:
            A[i] = [-a for a in A[i]]
            b[i] = -b[i]
    # tableau columns: N originals then m artificials
    T = [A[i] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [N + i for i in range(m)]
    width = N + m
    # objective: minimise sum of artificials -> reduced costs
    cost = [Fraction(0)] * N + [Fraction(1)] * m

    def reduced(j):
        return cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(m))

    while True:
        entering = next((j for j in range(width) if reduced(j) < 0), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            break  # unbounded cannot happen in phase one
        r = best[1]
        piv = T[r][entering]
        T[r] = [v / piv for v in T[r]]
        for i in range(m):
            if i != r and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [u - f * w for u, w in zip(T[i], T[r])]
        basis[r] = entering
    value = sum(T[i][-1] for i in range(m) if basis[i] >= N)
    if value != 0:
        return None
    lam = [Fraction(0)] * N
    for i in range(m):
        if basis[i] < N:
            lam[basis[i]] = T[i][-1]
    return tuple(lam)


@dataclass(frozen=True)
class NormalizationMap:
    """Affine lattice coordinates on Aff(P).

    ``basis`` is a Hermite-reduced lattice basis of Lin(P) ∩ Z^n, so the
    forward map is forward substitution on the pivot rows. Lattice points of
    Aff(P) go to integer vectors in Z^rank, bijectively.
    """

    basepoint: tuple
    basis: LatticeBasis

    @property
    def rank(self) -> int:
        return self.basis.rank

    @property
    def ambient(self) -> int:
        return self.basis.ambient

    def _pivots(self):
        return _pivot_columns(self.basis.as_columns()) if self.rank else []

    def forward(self, x: Sequence) -> tuple:
        """Coordinates of x; ints whenever x is a lattice point of Aff(P)."""
        residual = [a - b for a, b in zip(x, self.basepoint)]
        H = self.basis.as_columns()
        out = []
        for c, r in self._pivots():
            piv = H[r][c]
            val = residual[r]
            if isinstance(val, int) and val % piv == 0:
                q = val // piv
            else:
                q = Fraction(val) / piv
                if q.denominator == 1:
                    q = int(q)
            out.append(q)
            if q:
                for i in range(r, len(residual)):
                    residual[i] -= q * H[i][c]
        if any(residual):
            raise ValueError(f"point {tuple(x)} is not in the affine hull")
        return tuple(out)

    def backward(self, y: Sequence) -> tuple:
        out = list(self.basepoint)
        for coef, vec in zip(y, self.basis.vectors):
            for i, v in enumerate(vec):
                out[i] += coef * v
        return tuple(out)

    def pullback(self, a: Sequence) -> tuple:
        """Ambient covector c with c . (x - basepoint) == a . forward(x) on Aff(P)."""
        H = self.basis.as_columns()
        piv = self._pivots()
        cp = [Fraction(0)] * len(piv)
        # c . b_k = sum_l H[row_l][col_k] c_P[l] = a_k; only l >= k contribute
        for k in range(len(piv) - 1, -1, -1):
            ck, rk = piv[k]
            acc = Fraction(a[k])
            for l in range(k + 1, len(piv)):
                acc -= H[piv[l][1]][ck] * cp[l]
            cp[k] = acc / H[rk][ck]
        out = [Fraction(0)] * self.ambient
        for (c, r), v in zip(piv, cp):
            out[r] = v
        return tuple(out)


def normalization_map(points: Sequence[Sequence]) -> NormalizationMap:
    """Coordinates for Aff(points) based at the lexicographically first point."""
    base = min(tuple(p) for p in points)
    return NormalizationMap(base, lin_lattice_basis(points))
