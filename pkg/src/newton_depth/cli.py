"""Command-line interface: ``newton-depth <command> ...``.

Every command prints schema-versioned JSON (or a one-line summary with
``--format summary``). Exit codes: 0 success, 1 verification failure,
2 input or schema error, 3 caps exceeded.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import certifier, jsonio, lifting_subdivision as ls, polytope as pt, tropical_compiler as tc
from .errors import CapsExceeded, GenericityFailure, PreconditionError, SchemaError
from .lattice_volume import normalized_volume

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAPS = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    out: Optional[str] = None
    seed: Optional[int] = None
    caps: dict = field(default_factory=dict)
    fmt: str = "json"


def _point(text: str) -> tuple:
    try:
        return jsonio.decode_vector([p.strip() for p in text.split(",")])
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(f"bad point {text!r}: {exc}") from exc


def _poly(path: str) -> pt.Polytope:
    return jsonio.decode_polytope(jsonio.load_file(path))


def _envelope(cfg: RunConfig, body: dict) -> dict:
    out = {"schema_version": jsonio.SCHEMA_VERSION, "command": cfg.command}
    if cfg.seed is not None:
        out["seed"] = cfg.seed
    for key, val in body.items():
        if key != "schema_version":
            out[key] = val
    return out


def cmd_compile(cfg):
    net = tc.network_from_json(jsonio.load_file(cfg.args.network))
    pairs = tc.compile_network(net)
    return {"input_dim": net.input_dim, "hidden_layers": net.hidden_layers,
            "pairs": [tc.pair_to_json(p) for p in pairs]}, True


def cmd_eval(cfg):
    data = jsonio.load_file(cfg.args.file)
    x = _point(cfg.args.point)
    if isinstance(data, dict) and "layers" in data:
        net = tc.network_from_json(data)
        value = tc.eval_network(net, x)
        return {"source": "network", "point": jsonio.encode_vector(x), "value": jsonio.encode_vector(value)}, True
    if isinstance(data, dict) and "pairs" in data:
        pairs = [tc.pair_from_json(p) for p in data["pairs"]]
    else:
        pairs = [tc.pair_from_json(data)]
    value = tuple(tc.eval_pair(p, x) for p in pairs)
    return {"source": "pair", "point": jsonio.encode_vector(x), "value": jsonio.encode_vector(value)}, True


def cmd_volume(cfg):
    P = _poly(cfg.args.polytope)
    return {"dim": P.dim, "volume": jsonio.encode_scalar(normalized_volume(P))}, True


def cmd_faces(cfg):
    P = _poly(cfg.args.polytope)
    faces = pt.faces_of_dim_at_least(P, cfg.args.min_dim)
    return {"polytope": jsonio.encode_polytope(P), "min_dim": cfg.args.min_dim,
            "faces": [{"dim": f.dim, "direction": jsonio.encode_vector(f.direction),
                       "vertices": [jsonio.encode_vector(v) for v in f.polytope.vertices]} for f in faces]}, True


def cmd_msum(cfg):
    return {"polytope": jsonio.encode_polytope(pt.minkowski_sum(_poly(cfg.args.a), _poly(cfg.args.b)))}, True


def cmd_chull(cfg):
    return {"polytope": jsonio.encode_polytope(pt.conv_union(_poly(cfg.args.a), _poly(cfg.args.b)))}, True


def cmd_subdivide(cfg):
    P, Q = _poly(cfg.args.a), _poly(cfg.args.b)
    fn = ls.subdivide_sum if cfg.args.operation == "sum" else ls.subdivide_conv
    S = fn(P, Q, cfg.seed)
    rep = ls.verify_subdivision(S)
    body = ls.to_json(S)
    body["audit"] = {"checks": rep.checks, "failures": rep.failures, "passed": rep.passed}
    return body, rep.passed


def cmd_sample_pk(cfg):
    a = cfg.args
    size = tc.SizeParams(a.coord_bound, a.max_terms)
    tree, P = tc.sample_pk(a.k, a.n, size, cfg.seed)
    return {"k": a.k, "n": a.n, "size": {"coord_bound": size.coord_bound, "max_terms": size.max_terms},
            "tree": tc.tree_to_json(tree), "depth": tc.depth(tree), "polytope": jsonio.encode_polytope(P)}, True


def cmd_synthesize(cfg):
    g = tc.tree_from_json(jsonio.load_file(cfg.args.g_tree))
    h = tc.tree_from_json(jsonio.load_file(cfg.args.h_tree))
    net = tc.synthesize_network(g, h)
    body = tc.network_to_json(net)
    body["hidden_layers"] = net.hidden_layers
    return body, True


def cmd_check_qk(cfg):
    P = _poly(cfg.args.polytope)
    cert = certifier.check_qk(P, cfg.args.k, full=not cfg.args.short)
    return certifier.certificate_to_json(cert), True


def cmd_certify(cfg):
    a = cfg.args
    if a.explore_double:
        return certifier.explore_double_simplex(a.k), True
    body = certifier.certify_non_representability(a.k, seed=cfg.seed, trials=a.trials)
    return body, body["verdict"] == "certified"


COMMANDS = {
    "compile": cmd_compile, "eval": cmd_eval, "volume": cmd_volume, "faces": cmd_faces,
    "msum": cmd_msum, "chull": cmd_chull, "subdivide": cmd_subdivide, "sample-pk": cmd_sample_pk,
    "synthesize": cmd_synthesize, "check-qk": cmd_check_qk, "certify": cmd_certify,
}
RANDOMIZED = {"subdivide", "sample-pk", "certify"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--seed", type=int, help="64-bit seed (required by randomized commands)")
    common.add_argument("--max-dim", type=int, default=8, help="ambient dimension cap")
    common.add_argument("--max-vertices", type=int, default=512, help="vertex cap per polytope")
    common.add_argument("--format", choices=["json", "summary"], default="json")

    p = argparse.ArgumentParser(prog="newton-depth", description="Exact Newton-polytope tools for integral ReLU networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("compile", parents=[common], help="network JSON -> Newton polytope pairs")
    s.add_argument("network")
    s = sub.add_parser("eval", parents=[common], help="evaluate a network or pair at a point")
    s.add_argument("file")
    s.add_argument("--point", required=True, help="comma-separated, e.g. 3,-1/2 (write --point=-1,2 when it starts with a minus)")
    s = sub.add_parser("volume", parents=[common], help="normalized lattice volume")
    s.add_argument("polytope")
    s = sub.add_parser("faces", parents=[common], help="faces of dimension >= d")
    s.add_argument("polytope")
    s.add_argument("--min-dim", type=int, default=0)
    for name, text in (("msum", "Minkowski sum"), ("chull", "convex hull of the union")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("a")
        s.add_argument("b")
    s = sub.add_parser("subdivide", parents=[common], help="generic-lift subdivision with audit")
    s.add_argument("operation", choices=["sum", "conv"])
    s.add_argument("a")
    s.add_argument("b")
    s = sub.add_parser("sample-pk", parents=[common], help="random construction tree of depth k")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--coord-bound", type=int, default=2)
    s.add_argument("--max-terms", type=int, default=3)
    s = sub.add_parser("synthesize", parents=[common], help="trees -> integral network")
    s.add_argument("g_tree")
    s.add_argument("h_tree")
    s = sub.add_parser("check-qk", parents=[common], help="even-volume face certificate")
    s.add_argument("polytope")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--short", action="store_true", help="stop at the first odd face")
    s = sub.add_parser("certify", parents=[common], help="non-representability certificate")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--trials", type=int)
    s.add_argument("--explore-double", action="store_true",
                   help="only report the parity data of 2 * simplex (no claim)")
    return p


def _summary(cfg: RunConfig, body: dict, ok: bool) -> str:
    keys = ("volume", "verdict", "dim", "hidden_layers", "value", "passed")
    parts = [f"{k}={body[k]}" for k in keys if k in body]
    return f"{cfg.command}: {'ok' if ok else 'FAILED'} " + " ".join(parts) + "\n"


def run(cfg: RunConfig) -> int:
    if cfg.command in RANDOMIZED and cfg.seed is None and not getattr(cfg.args, "explore_double", False):
        print(f"error: --seed is required for {cfg.command}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.seed is not None and not -(1 << 63) <= cfg.seed < (1 << 64):
        print("error: --seed must fit in 64 bits", file=sys.stderr)
        return EXIT_INPUT
    try:
        with pt.caps_scope(**cfg.caps):
            body, ok = COMMANDS[cfg.command](cfg)
    except CapsExceeded as exc:
        print(f"caps exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPS
    except (SchemaError, PreconditionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GenericityFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    body = _envelope(cfg, body)
    text = jsonio.dumps(body) if cfg.fmt == "json" else _summary(cfg, body, ok)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    caps = {"max_ambient": args.max_dim, "max_vertices": args.max_vertices}
    if args.max_dim < 1 or args.max_vertices < 1:
        print("error: caps must be positive", file=sys.stderr)
        return EXIT_INPUT
    cfg = RunConfig(args.command, args, args.out, args.seed, caps, args.format)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
