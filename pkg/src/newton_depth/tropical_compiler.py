"""Integral ReLU networks and their Newton-polytope pairs.

A bias-free integral network computes a positively homogeneous CPWL
function f = g - h with g, h convex. Compilation tracks the pair of
Newton polytopes (P_g, P_h) neuron by neuron:

* input x_i            -> ({e_i}, {0})
* sum of w_j * f_j     -> dilate by |w_j|, swap the pair when w_j < 0, add
* relu(g - h)          -> (conv(P_g u P_h), P_h)

Construction trees describe polytopes built from lattice points by pairwise
convex hulls and Minkowski sums. The compiler attaches one to each side of
every pair, and :func:`synthesize_network` turns trees back into networks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

from .errors import PreconditionError, SchemaError
from .polytope import (
    Polytope,
    _scalar,
    argmin_face,
    conv_union,
    dilate,
    equal,
    from_points,
    minkowski_sum,
    point,
    translate,
)


# ---------------------------------------------------------------- networks

@dataclass(frozen=True)
class IntegralNetwork:
    """Layers A^(1), ..., A^(k+1); relu after every layer except the last."""

    input_dim: int
    layers: tuple

    def __post_init__(self):
        if self.input_dim < 1:
            raise PreconditionError("input dimension must be positive")
        if not self.layers:
            raise PreconditionError("a network needs at least an output layer")
        layers = []
        width = self.input_dim
        for k, A in enumerate(self.layers):
            rows = []
            for row in A:
                if len(row) != width:
                    raise PreconditionError(f"layer {k + 1} expects rows of length {width}, got {len(row)}")
                if any(isinstance(w, bool) or not isinstance(w, int) and int(w) != w for w in row):
                    raise PreconditionError(f"layer {k + 1} has a non-integer weight")
                rows.append(tuple(int(w) for w in row))
            if not rows:
                raise PreconditionError(f"layer {k + 1} is empty")
            layers.append(tuple(rows))
            width = len(rows)
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def hidden_layers(self) -> int:
        return len(self.layers) - 1

    @property
    def output_dim(self) -> int:
        return len(self.layers[-1])

    @property
    def widths(self) -> list:
        return [len(A) for A in self.layers[:-1]]


def _affine(A, x):
    return [sum(w * v for w, v in zip(row, x)) for row in A]


def eval_network(net: IntegralNetwork, x: Sequence) -> tuple:
    """Exact forward pass."""
    if len(x) != net.input_dim:
        raise PreconditionError(f"expected {net.input_dim} inputs, got {len(x)}")
    h = [_scalar(v) for v in x]
    for A in net.layers[:-1]:
        h = [v if v > 0 else 0 for v in _affine(A, h)]
    return tuple(_scalar(v) for v in _affine(net.layers[-1], h))


def random_network(seed: int, max_hidden: int = 3, max_width: int = 4, max_input: int = 4,
                   weight_bound: int = 3) -> IntegralNetwork:
    """Seeded random bias-free network with one output."""
    rng = random.Random(seed)
    n = rng.randint(1, max_input)
    k = rng.randint(1, max_hidden)
    widths = [n] + [rng.randint(1, max_width) for _ in range(k)] + [1]
    layers = []
    for a, b in zip(widths, widths[1:]):
        layers.append(tuple(tuple(rng.randint(-weight_bound, weight_bound) for _ in range(a)) for _ in range(b)))
    return IntegralNetwork(n, tuple(layers))


def network_to_json(net: IntegralNetwork) -> dict:
    return {"input_dim": net.input_dim, "layers": [[list(row) for row in A] for A in net.layers]}


def network_from_json(data) -> IntegralNetwork:
    if not isinstance(data, dict):
        raise SchemaError("network JSON must be an object")
    if "biases" in data or "bias" in data:
        raise SchemaError("networks are bias-free: remove the 'biases' key (biases are not supported)")
    unknown = set(data) - {"input_dim", "layers", "schema_version"}
    if unknown:
        raise SchemaError(f"unknown network fields: {sorted(unknown)}")
    try:
        n = data["input_dim"]
        layers = data["layers"]
        if not isinstance(n, int) or isinstance(n, bool) or not isinstance(layers, list):
            raise TypeError("'input_dim' must be an integer and 'layers' a list")
        for A in layers:
            for row in A:
                for w in row:
                    if isinstance(w, bool) or not isinstance(w, int):
                        raise TypeError(f"weight {w!r} is not an integer")
        return IntegralNetwork(n, tuple(tuple(tuple(row) for row in A) for A in layers))
    except (KeyError, TypeError, PreconditionError) as exc:
        raise SchemaError(f"bad network JSON: {exc}") from exc


# ---------------------------------------------------------------- trees

@dataclass(frozen=True)
class Leaf:
    point: tuple


@dataclass(frozen=True)
class Conv:
    left: "Tree"
    right: "Tree"


@dataclass(frozen=True)
class Sum:
    children: tuple


Tree = Union[Leaf, Conv, Sum]


@lru_cache(maxsize=None)
def depth(tree: Tree) -> int:
    """Alternation depth: convex hulls add one level, sums add none."""
    if isinstance(tree, Leaf):
        return 0
    if isinstance(tree, Conv):
        return max(depth(tree.left), depth(tree.right)) + 1
    return max((depth(c) for c in tree.children), default=0)


def tree_ambient(tree: Tree) -> int:
    while not isinstance(tree, Leaf):
        tree = tree.left if isinstance(tree, Conv) else tree.children[0]
    return len(tree.point)


@lru_cache(maxsize=4096)
def tree_to_polytope(tree: Tree) -> Polytope:
    if isinstance(tree, Leaf):
        return point(tree.point)
    if isinstance(tree, Conv):
        return conv_union(tree_to_polytope(tree.left), tree_to_polytope(tree.right))
    if not tree.children:
        raise PreconditionError("empty Sum node")
    acc = tree_to_polytope(tree.children[0])
    for c in tree.children[1:]:
        acc = minkowski_sum(acc, tree_to_polytope(c))
    return acc


def scale_tree(tree: Tree, w: int) -> Tree:
    """Tree of w * P for an integer w >= 0."""
    if w == 1:
        return tree
    if isinstance(tree, Leaf):
        return Leaf(tuple(w * x for x in tree.point))
    if w == 0:
        return Leaf((0,) * tree_ambient(tree))
    if isinstance(tree, Conv):
        return Conv(scale_tree(tree.left, w), scale_tree(tree.right, w))
    return Sum(tuple(scale_tree(c, w) for c in tree.children))


def sum_trees(trees: Sequence[Tree], ambient: int) -> Tree:
    """Flattened Sum node; the empty sum is the origin."""
    flat = []
    for t in trees:
        flat.extend(t.children if isinstance(t, Sum) else (t,))
    leaves = [t for t in flat if isinstance(t, Leaf)]
    rest = [t for t in flat if not isinstance(t, Leaf)]
    if leaves:
        total = tuple(sum(col) for col in zip(*(t.point for t in leaves)))
        if any(total) or not rest:
            rest.append(Leaf(total))
    if not rest:
        return Leaf((0,) * ambient)
    return rest[0] if len(rest) == 1 else Sum(tuple(rest))


def tree_to_json(tree: Tree):
    from .jsonio import encode_vector
    if isinstance(tree, Leaf):
        return {"leaf": encode_vector(tree.point)}
    if isinstance(tree, Conv):
        return {"conv": [tree_to_json(tree.left), tree_to_json(tree.right)]}
    return {"sum": [tree_to_json(c) for c in tree.children]}


def tree_from_json(data) -> Tree:
    from .jsonio import decode_vector
    if not isinstance(data, dict) or len(data) != 1:
        raise SchemaError("a tree node is an object with exactly one of 'leaf', 'conv', 'sum'")
    (key, val), = data.items()
    if key == "leaf":
        return Leaf(decode_vector(val))
    if key == "conv":
        if not isinstance(val, list) or len(val) != 2:
            raise SchemaError("'conv' takes exactly two children")
        return Conv(tree_from_json(val[0]), tree_from_json(val[1]))
    if key == "sum":
        if not isinstance(val, list) or not val:
            raise SchemaError("'sum' takes a nonempty list of children")
        return Sum(tuple(tree_from_json(c) for c in val))
    raise SchemaError(f"unknown tree node {key!r}")


# ---------------------------------------------------------------- pairs

@dataclass(frozen=True)
class PolytopePair:
    """f(x) = max_{a in pos} a.x - max_{b in neg} b.x."""

    pos: Polytope
    neg: Polytope
    pos_tree: Optional[Tree] = None
    neg_tree: Optional[Tree] = None


def eval_pair(pair: PolytopePair, x: Sequence):
    if len(x) != pair.pos.ambient:
        raise PreconditionError(f"expected a point of length {pair.pos.ambient}, got {len(x)}")
    x = [_scalar(v) for v in x]
    g = max(sum(a * b for a, b in zip(v, x)) for v in pair.pos.vertices)
    h = max(sum(a * b for a, b in zip(v, x)) for v in pair.neg.vertices)
    return _scalar(g - h)


def _combine(terms, n: int) -> PolytopePair:
    """Integer combination sum w_j f_j of pairs."""
    pos, neg, pt, nt = [], [], [], []
    for w, pr in terms:
        if w == 0:
            continue
        a, b, at, bt = pr.pos, pr.neg, pr.pos_tree, pr.neg_tree
        if w < 0:
            a, b, at, bt = b, a, bt, at
        m = abs(w)
        pos.append(dilate(a, m))
        neg.append(dilate(b, m))
        pt.append(scale_tree(at, m))
        nt.append(scale_tree(bt, m))

    def total(polys):
        acc = point((0,) * n)
        for P in polys:
            acc = minkowski_sum(acc, P)
        return acc

    return PolytopePair(total(pos), total(neg), sum_trees(pt, n), sum_trees(nt, n))


def _relu(pr: PolytopePair) -> PolytopePair:
    return PolytopePair(conv_union(pr.pos, pr.neg), pr.neg, Conv(pr.pos_tree, pr.neg_tree), pr.neg_tree)


def _normalize(pr: PolytopePair, n: int) -> PolytopePair:
    """Translate both sides so that neg starts at the origin."""
    t = pr.neg.vertices[0]
    if not any(t):
        return pr
    s = tuple(-x for x in t)
    return PolytopePair(translate(pr.pos, s), translate(pr.neg, s),
                        sum_trees([pr.pos_tree, Leaf(s)], n), sum_trees([pr.neg_tree, Leaf(s)], n))


def compile_network(net: IntegralNetwork) -> list:
    """One Newton-polytope pair per output, with construction-tree provenance."""
    if not isinstance(net, IntegralNetwork):
        raise PreconditionError("compile expects an IntegralNetwork")
    n = net.input_dim
    zero = (0,) * n
    layer = []
    for i in range(n):
        e = tuple(int(i == j) for j in range(n))
        layer.append(PolytopePair(point(e), point(zero), Leaf(e), Leaf(zero)))
    for A in net.layers[:-1]:
        layer = [_relu(_combine(zip(row, layer), n)) for row in A]
    return [_normalize(_combine(zip(row, layer), n), n) for row in net.layers[-1]]


compile = compile_network


def newton_polytope(pair: PolytopePair) -> Polytope:
    """The Newton polytope C of a convex pair, i.e. the C with C + neg = pos.

    For each vertex a of pos, a direction selecting a alone must select a
    single vertex b of neg, and a - b is a vertex of C. Raises
    PreconditionError when neg is not a Minkowski summand of pos (the
    pair's function is then not convex).
    """
    pos, neg = pair.pos, pair.neg
    cands = []
    for i, a in enumerate(pos.vertices):
        c = pos.witness(1 << i)
        B = argmin_face(neg, c)
        if len(B.vertices) != 1:
            raise PreconditionError("neg is not a Minkowski summand of pos")
        b = B.vertices[0]
        cands.append(tuple(x - y for x, y in zip(a, b)))
    C = from_points(cands)
    if not equal(minkowski_sum(C, neg), pos):
        raise PreconditionError("neg is not a Minkowski summand of pos")
    return C


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True)
class SizeParams:
    coord_bound: int = 2
    max_terms: int = 3


def sample_tree(k: int, n: int, size: SizeParams, rng: random.Random) -> Tree:
    if k == 0:
        return Leaf(tuple(rng.randint(-size.coord_bound, size.coord_bound) for _ in range(n)))
    terms = [Conv(sample_tree(k - 1, n, size, rng), sample_tree(k - 1, n, size, rng))
             for _ in range(rng.randint(1, size.max_terms))]
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def sample_pk(k: int, n: int, size_params: Optional[SizeParams] = None, seed: int = 0) -> tuple:
    """Seeded random construction tree of depth exactly k, with its polytope."""
    if k < 0 or n < 1:
        raise PreconditionError("need k >= 0 and n >= 1")
    size = size_params or SizeParams()
    tree = sample_tree(k, n, size, random.Random(seed))
    return tree, tree_to_polytope(tree)


# ---------------------------------------------------------------- synthesis

class _Builder:
    """Layered network assembled from linear combinations of units.

    Level 0 units are the inputs; level l >= 1 units are the relu neurons
    of hidden layer l. A combination is a dict unit -> integer coefficient.
    """

    def __init__(self, n: int, levels: int):
        self.n = n
        self.levels = levels
        self.neurons = [None] + [{} for _ in range(levels)]  # key -> index
        self.rows = [None] + [[] for _ in range(levels)]

    def neuron(self, level: int, combo: dict) -> int:
        key = tuple(sorted((u, c) for u, c in combo.items() if c))
        table = self.neurons[level]
        if key not in table:
            table[key] = len(self.rows[level])
            self.rows[level].append(key)
        return table[key]

    @staticmethod
    def add(*combos, scale=None) -> dict:
        out = {}
        for k, combo in enumerate(combos):
            s = 1 if scale is None else scale[k]
            for u, c in combo.items():
                out[u] = out.get(u, 0) + s * c
        return {u: c for u, c in out.items() if c}

    def forward(self, combo: dict, level: int) -> dict:
        """Carry a level-(level-1) combination to the same function at ``level``."""
        out = {}
        for u, c in combo.items():
            if level == 1:
                # x = relu(x) - relu(-x)
                p = self.neuron(1, {u: 1})
                m = self.neuron(1, {u: -1})
                out[p] = out.get(p, 0) + c
                out[m] = out.get(m, 0) - c
            else:
                # relu outputs are non-negative, so relu(u) = u
                v = self.neuron(level, {u: 1})
                out[v] = out.get(v, 0) + c
        return {u: c for u, c in out.items() if c}

    def build(self, tree: Tree, level: int) -> dict:
        if isinstance(tree, Leaf):
            combo = {i: c for i, c in enumerate(tree.point) if c}
            for l in range(1, level + 1):
                combo = self.forward(combo, l)
            return combo
        if isinstance(tree, Sum):
            return self.add(*(self.build(c, level) for c in tree.children))
        if level < 1:
            raise PreconditionError("tree is deeper than the requested level")
        a = self.build(tree.left, level - 1)
        b = self.build(tree.right, level - 1)
        # max(a, b) = a + relu(b - a)
        r = self.neuron(level, self.add(b, a, scale=[1, -1]))
        return self.add(self.forward(a, level), {r: 1})

    def network(self, output: dict) -> IntegralNetwork:
        layers = []
        width = self.n
        for l in range(1, self.levels + 1):
            if not self.rows[l]:
                self.neuron(l, {})
            rows = []
            for key in self.rows[l]:
                row = [0] * width
                for u, c in key:
                    row[u] += c
                rows.append(tuple(row))
            layers.append(tuple(rows))
            width = len(rows)
        out = [0] * width
        for u, c in output.items():
            out[u] += c
        layers.append((tuple(out),))
        return IntegralNetwork(self.n, tuple(layers))


def synthesize_network(g_tree: Tree, h_tree: Tree) -> IntegralNetwork:
    """Network with max(depth g, depth h) hidden layers computing g - h.

    g and h are the support-style functions x -> max over vertices a of a.x
    of the trees' polytopes.
    """
    n = tree_ambient(g_tree)
    if tree_ambient(h_tree) != n:
        raise PreconditionError("trees live in different ambient dimensions")
    L = max(depth(g_tree), depth(h_tree))
    b = _Builder(n, L)
    out = b.add(b.build(g_tree, L), b.build(h_tree, L), scale=[1, -1])
    return b.network(out)


def max_tree(n: int, with_zero: bool = True) -> Tree:
    """Balanced tree for max{0, x_1, ..., x_n} (or max{x_1, ..., x_n})."""
    leaves = [Leaf(tuple(int(i == j) for j in range(n))) for i in range(n)]
    if with_zero:
        leaves.insert(0, Leaf((0,) * n))
    while len(leaves) > 1:
        nxt = [Conv(leaves[i], leaves[i + 1]) for i in range(0, len(leaves) - 1, 2)]
        if len(leaves) % 2:
            nxt.append(leaves[-1])
        leaves = nxt
    return leaves[0]


def pair_to_json(pair: PolytopePair) -> dict:
    from .jsonio import encode_polytope
    out = {"pos": encode_polytope(pair.pos), "neg": encode_polytope(pair.neg)}
    if pair.pos_tree is not None:
        out["pos_tree"] = tree_to_json(pair.pos_tree)
        out["neg_tree"] = tree_to_json(pair.neg_tree)
    return out


def pair_from_json(data) -> PolytopePair:
    from .jsonio import decode_polytope
    if not isinstance(data, dict) or "pos" not in data or "neg" not in data:
        raise SchemaError("pair JSON needs 'pos' and 'neg'")
    pos, neg = decode_polytope(data["pos"]), decode_polytope(data["neg"])
    if pos.ambient != neg.ambient:
        raise SchemaError("pos and neg live in different dimensions")
    pt = tree_from_json(data["pos_tree"]) if "pos_tree" in data else None
    nt = tree_from_json(data["neg_tree"]) if "neg_tree" in data else None
    return PolytopePair(pos, neg, pt, nt)
