import itertools
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from newton_depth.errors import CapsExceeded, PreconditionError
from newton_depth.exact_linalg import convex_combination, rank
from newton_depth.polytope import (
    Polytope,
    argmin_face,
    caps_scope,
    contains,
    conv_union,
    dilate,
    equal,
    face_in_direction,
    faces_of_dim_at_least,
    facets,
    from_json,
    from_points,
    in_halfspaces,
    minkowski_sum,
    point,
    simplex,
    to_json,
    translate,
    unimodular_image,
)

from strategies import points, polytope_pairs, polytopes, unimodular

SQUARE = from_points([(0, 0), (1, 0), (0, 1), (1, 1)])


def lp_vertices(pts):
    """Vertices by the convex-combination test against the other points."""
    pts = sorted(set(pts))
    return [p for i, p in enumerate(pts) if convex_combination(pts[:i] + pts[i + 1:], p) is None] if len(pts) > 1 else pts


def cube(n):
    return from_points(list(itertools.product((0, 1), repeat=n)))


def support(P, c):
    return min(sum(a * b for a, b in zip(c, v)) for v in P.vertices)


# ---- construction

def test_from_points_examples():
    assert from_points([(0, 0), (1, 0), (2, 0)]).vertices == ((0, 0), (2, 0))
    tri = from_points([(0, 0), (1, 0), (0, 1)])
    assert tri == simplex(2) and len(tri) == 3 and tri.dim == 2
    grid = from_points([(i, j) for i in range(3) for j in range(3)])
    assert grid.vertices == ((0, 0), (0, 2), (2, 0), (2, 2))


def test_from_points_errors():
    with pytest.raises(PreconditionError):
        from_points([])
    with pytest.raises(PreconditionError):
        from_points([(0, 0), (1,)])
    with pytest.raises(TypeError):
        from_points([(0.5, 1)])


@given(st.integers(1, 4).flatmap(lambda n: points(n, max_size=9)))
def test_from_points_matches_lp_vertex_oracle(pts):
    P = from_points(pts)
    assert list(P.vertices) == lp_vertices(pts)


@given(polytopes(max_n=4))
def test_from_points_idempotent(P):
    assert from_points(P.vertices) == P
    assert from_points(reversed(P.vertices)) == P


def test_rational_vertices():
    P = from_points([(Fraction(1, 2), 0), (0, Fraction(1, 3)), (0, 0), (Fraction(1, 8), Fraction(1, 8))])
    assert P.vertices == ((0, 0), (0, Fraction(1, 3)), (Fraction(1, 2), 0))
    assert not P.is_lattice and P.dim == 2
    assert len(facets(P)) == 3


def test_simplex_and_dim():
    assert simplex(1).vertices == ((0,), (1,))
    assert simplex(2).dim == 2
    assert len(simplex(4)) == 5 and simplex(4).dim == 4
    with pytest.raises(PreconditionError):
        simplex(0)
    assert point((1, 2)).dim == 0
    assert from_points([(0, 0), (2, 4)]).dim == 1


# ---- sums and hulls

def test_minkowski_examples():
    P = from_points([(1, 2), (3, 0), (0, 0)])
    assert minkowski_sum(point((0, 0)), P) == P
    e1, e2 = from_points([(0, 0), (1, 0)]), from_points([(0, 0), (0, 1)])
    assert minkowski_sum(e1, e2) == SQUARE
    par = minkowski_sum(from_points([(0, 0), (-1, 2)]), from_points([(0, 0), (2, 1)]))
    assert set(par.vertices) == {(0, 0), (-1, 2), (2, 1), (1, 3)}
    with pytest.raises(PreconditionError):
        minkowski_sum(e1, simplex(3))


def test_conv_union_examples():
    assert conv_union(SQUARE, SQUARE) == SQUARE
    assert conv_union(point((0,)), point((1,))) == simplex(1)
    assert conv_union(from_points([(0, 0), (1, 0)]), from_points([(0, 1), (1, 1)])) == SQUARE


@given(polytope_pairs(), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_support_function_identities(pair, c):
    P, Q = pair
    c = c[:P.ambient]
    assert support(minkowski_sum(P, Q), c) == support(P, c) + support(Q, c)
    assert support(conv_union(P, Q), c) == min(support(P, c), support(Q, c))


@given(polytope_pairs(), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_face_of_sum_is_sum_of_faces(pair, c):
    P, Q = pair
    c = c[:P.ambient]
    if not any(c):
        return
    lhs = face_in_direction(minkowski_sum(P, Q), c).polytope
    rhs = minkowski_sum(face_in_direction(P, c).polytope, face_in_direction(Q, c).polytope)
    assert lhs == rhs


# ---- faces and facets

def test_face_in_direction_examples():
    S = simplex(2)
    f = face_in_direction(S, (1, 1))
    assert f.polytope.vertices == ((0, 0),) and f.dim == 0
    f = face_in_direction(S, (0, -1))
    assert f.polytope.vertices == ((0, 1),) and f.dim == 0
    f = face_in_direction(SQUARE, (1, 0))
    assert f.polytope.vertices == ((0, 0), (0, 1)) and f.dim == 1
    with pytest.raises(PreconditionError):
        face_in_direction(S, (0, 0))


def test_facets_examples():
    seg = from_points([(0,), (2,)])
    assert {(f.normal, f.offset) for f in facets(seg)} == {((1,), 0), ((-1,), -2)}
    tri = facets(simplex(2))
    assert {(f.normal, f.offset) for f in tri} == {((1, 0), 0), ((0, 1), 0), ((-1, -1), -1)}
    assert all(len(f.vertices) == 2 for f in tri)
    assert len(facets(SQUARE)) == 4 and all(len(f.vertices) == 2 for f in facets(SQUARE))
    with pytest.raises(PreconditionError):
        facets(point((0, 0)))


@given(polytopes(max_n=4, max_size=9))
def test_facets_support_and_are_irredundant(P):
    if P.dim == 0:
        return
    F = facets(P)
    assert len({f.normal for f in F}) == len(F)
    for f in F:
        vals = [sum(a * b for a, b in zip(f.normal, v)) for v in P.vertices]
        assert min(vals) == f.offset
        on = [v for v, x in zip(P.vertices, vals) if x == f.offset]
        assert tuple(on) == f.vertices
        assert rank([[a - b for a, b in zip(v, on[0])] for v in on[1:]] or [[0] * P.ambient]) == P.dim - 1
        # some vertex is strictly inside, so the normal is not parallel to Aff(P)^perp
        assert max(vals) > f.offset


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_simplex_face_counts(n):
    faces = faces_of_dim_at_least(simplex(n), 0)
    for d in range(n + 1):
        assert sum(f.dim == d for f in faces) == comb(n + 1, d + 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cube_face_counts(n):
    faces = faces_of_dim_at_least(cube(n), 0)
    for d in range(n + 1):
        assert sum(f.dim == d for f in faces) == 2 ** (n - d) * comb(n, d)


def test_faces_examples():
    assert [f.dim for f in faces_of_dim_at_least(simplex(2), 2)] == [2]
    assert len(faces_of_dim_at_least(simplex(2), 1)) == 4
    assert len(faces_of_dim_at_least(SQUARE, 1)) == 5
    with pytest.raises(PreconditionError):
        faces_of_dim_at_least(SQUARE, 3)


@given(polytopes(max_n=4, max_size=8))
def test_faces_have_witnesses_and_euler(P):
    faces = faces_of_dim_at_least(P, 0)
    assert len({f.polytope.vertices for f in faces}) == len(faces)
    for f in faces:
        assert argmin_face(P, f.direction) == f.polytope
        assert f.polytope.dim == f.dim
    if P.dim >= 1:
        counts = [sum(f.dim == d for f in faces) for d in range(P.dim + 1)]
        assert sum((-1) ** d * c for d, c in enumerate(counts)) == 1


@given(polytopes(max_n=4, max_size=8))
def test_faces_of_faces_are_faces(P):
    if P.dim < 2:
        return
    faces = {f.polytope.vertices for f in faces_of_dim_at_least(P, 0)}
    for f in faces_of_dim_at_least(P, P.dim - 1):
        fresh = from_points(f.polytope.vertices)
        for g in faces_of_dim_at_least(fresh, 0):
            assert g.polytope.vertices in faces


# ---- predicates and maps

def test_contains_examples():
    S = simplex(2)
    assert contains(S, (Fraction(1, 3), Fraction(1, 3)))
    assert not contains(S, (1, 1))
    assert equal(S, translate(S, (0, 0)))


@given(polytopes(max_n=3), st.lists(st.fractions(-3, 3, max_denominator=4), min_size=3, max_size=3))
def test_contains_agrees_with_halfspaces(P, x):
    x = x[:P.ambient]
    assert contains(P, x) == in_halfspaces(P, x)
    for v in P.vertices:
        assert contains(P, v) and in_halfspaces(P, v)


@given(polytope_pairs())
def test_equal_consistent_with_mutual_containment(pair):
    P, Q = pair
    both = all(contains(Q, v) for v in P.vertices) and all(contains(P, v) for v in Q.vertices)
    assert equal(P, Q) == both
    assert equal(P, P)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(polytopes(n=n), unimodular(n),
                                                     st.lists(st.integers(-3, 3), min_size=n, max_size=n))))
def test_unimodular_image_is_canonical_and_invertible(data):
    P, U, t = data
    img = unimodular_image(P, U, t)
    assert img == from_points(img.vertices)
    assert img.dim == P.dim and len(img) == len(P)


def test_unimodular_image_rejects_non_unimodular():
    with pytest.raises(PreconditionError):
        unimodular_image(SQUARE, [[2, 0], [0, 1]])
    assert unimodular_image(SQUARE, [[0, 1], [1, 0]], (1, 1)) == translate(SQUARE, (1, 1))


def test_dilate():
    assert dilate(simplex(2), 3).vertices == ((0, 0), (0, 3), (3, 0))
    assert dilate(simplex(2), 0) == point((0, 0))


# ---- caps and JSON

def test_caps_are_enforced():
    with caps_scope(max_ambient=2):
        with pytest.raises(CapsExceeded):
            simplex(3)
    with caps_scope(max_vertices=3):
        with pytest.raises(CapsExceeded):
            cube(2)
        assert len(simplex(2)) == 3
    with pytest.raises(CapsExceeded):
        from_points([tuple(int(i == j) for j in range(9)) for i in range(9)])


def test_json_round_trip_and_arbitrary_order():
    P = from_points([(1, 2), (0, 0), (3, 1)])
    data = to_json(P)
    assert data == {"ambient": 2, "vertices": [[0, 0], [1, 2], [3, 1]]}
    assert from_json(data) == P
    assert from_json({"ambient": 2, "vertices": [[3, 1], [1, 1], [0, 0], [1, 2]]}) == P
    R = from_points([(Fraction(1, 2),), (3,)])
    assert from_json(to_json(R)) == R
    assert to_json(R)["vertices"] == [["1/2"], [3]]


def test_polytope_is_hashable_value():
    assert len({simplex(2), from_points([(1, 0), (0, 1), (0, 0)])}) == 1
    assert isinstance(simplex(2), Polytope)


# ---- floating-point hull oracle

@given(polytopes(max_n=4, max_size=9, bound=3))
def test_vertices_and_facets_match_qhull(P):
    spatial = pytest.importorskip("scipy.spatial")
    import numpy as np
    if P.dim != P.ambient or P.ambient < 2:
        return
    hull = spatial.ConvexHull(np.array(P.vertices, dtype=float))
    assert sorted(tuple(P.vertices[i]) for i in hull.vertices) == sorted(P.vertices)
    # qhull triangulates facets; merge simplices by their hyperplane
    planes = {tuple(np.round(eq / np.abs(eq[:-1]).max(), 9)) for eq in hull.equations}
    assert len(planes) == len(facets(P))
