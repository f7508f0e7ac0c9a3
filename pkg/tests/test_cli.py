import json
import shutil
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from newton_depth import cli
from newton_depth.errors import SchemaError
from newton_depth.jsonio import (
    SCHEMA_VERSION,
    decode_polytope,
    decode_scalar,
    decode_vector,
    dumps,
    encode_polytope,
    encode_scalar,
    load_file,
    loads,
)
from newton_depth.lifting_subdivision import from_json as subdivision_from_json, verify_subdivision
from newton_depth.polytope import dilate, from_points, simplex
from newton_depth.tropical_compiler import (
    Leaf,
    network_from_json,
    pair_from_json,
    tree_from_json,
    tree_to_json,
    tree_to_polytope,
)

from strategies import polytopes

SKIP_NET = {"input_dim": 2, "layers": [[[1, -1], [0, 1], [0, -1]], [[1, 1, -1]], [[1]]]}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip().startswith("{") else out), err


# ---- jsonio

@given(st.one_of(st.integers(-(1 << 80), 1 << 80), st.fractions()))
def test_scalar_round_trip(x):
    enc = encode_scalar(x)
    assert decode_scalar(json.loads(json.dumps(enc))) == x
    if isinstance(enc, int):
        assert abs(enc) < 1 << 53


def test_scalar_encoding_rules():
    assert encode_scalar(Fraction(-1, 2)) == "-1/2"
    assert encode_scalar(1 << 60) == str(1 << 60)
    assert encode_scalar(Fraction(6, 3)) == 2
    for bad in (True, 0.5):
        with pytest.raises(TypeError):
            encode_scalar(bad)
    for bad in (0.5, True, "1/0", "abc", None):
        with pytest.raises(SchemaError):
            decode_scalar(bad)
    with pytest.raises(SchemaError):
        decode_vector("1,2")


@given(polytopes(max_n=4, max_size=6))
def test_polytope_round_trip(P):
    assert decode_polytope(loads(dumps(encode_polytope(P)))) == P


def test_polytope_decoding_errors():
    for bad in ({}, {"vertices": []}, {"ambient": 3, "vertices": [[0, 0]]}, [1]):
        with pytest.raises(SchemaError):
            decode_polytope(bad)
    with pytest.raises(SchemaError):
        loads("{nope")
    with pytest.raises(SchemaError):
        load_file("/nonexistent/file.json")


def test_dumps_is_stable():
    obj = {"b": 1, "a": [1, "2/3"]}
    assert dumps(obj) == dumps(json.loads(dumps(obj)))
    assert dumps(obj).endswith("\n")


# ---- commands

def test_volume_of_simplex(tmp_path, capsys):
    path = write(tmp_path, "d4.json", encode_polytope(simplex(4)))
    code, out, _ = run(capsys, "volume", path)
    assert code == 0 and out["volume"] == 1 and out["dim"] == 4
    assert out["schema_version"] == SCHEMA_VERSION and out["command"] == "volume"


def test_compile_and_eval(tmp_path, capsys):
    net = write(tmp_path, "net.json", SKIP_NET)
    code, out, _ = run(capsys, "compile", net)
    assert code == 0 and out["hidden_layers"] == 2
    pair = pair_from_json(out["pairs"][0])
    assert tree_to_polytope(pair.pos_tree) == pair.pos
    compiled = write(tmp_path, "pairs.json", out)
    code, a, _ = run(capsys, "eval", net, "--point", "3,-1/2")
    assert code == 0 and a["value"] == [3] and a["source"] == "network"
    code, b, _ = run(capsys, "eval", compiled, "--point", "3,-1/2")
    assert code == 0 and b["value"] == [3] and b["source"] == "pair"
    code, c, _ = run(capsys, "eval", write(tmp_path, "pair.json", out["pairs"][0]), "--point=-1,-7/3")
    assert code == 0 and c["value"] == [0]


def test_bias_key_exits_2(tmp_path, capsys):
    net = write(tmp_path, "b.json", dict(SKIP_NET, biases=[[0, 0, 0], [0], [0]]))
    code, _, err = run(capsys, "compile", net)
    assert code == 2 and "bias" in err


def test_faces_msum_chull(tmp_path, capsys):
    sq = write(tmp_path, "sq.json", {"vertices": [[0, 0], [1, 0], [0, 1], [1, 1]]})
    tri = write(tmp_path, "tri.json", encode_polytope(simplex(2)))
    code, out, _ = run(capsys, "faces", sq, "--min-dim", "1")
    assert code == 0 and sorted(f["dim"] for f in out["faces"]) == [1, 1, 1, 1, 2]
    code, out, _ = run(capsys, "msum", sq, tri)
    assert code == 0 and len(out["polytope"]["vertices"]) == 5
    code, out, _ = run(capsys, "chull", sq, tri)
    assert code == 0 and decode_polytope(out["polytope"]) == decode_polytope(encode_polytope(
        from_points([(0, 0), (1, 0), (0, 1), (1, 1)])))


def test_subdivide(tmp_path, capsys):
    tri = write(tmp_path, "tri.json", encode_polytope(simplex(2)))
    for op in ("sum", "conv"):
        code, out, _ = run(capsys, "subdivide", op, tri, tri, "--seed", "17")
        assert code == 0 and out["audit"]["passed"] and out["seed"] == 17
        S = subdivision_from_json(out)
        assert verify_subdivision(S).passed


def test_sample_pk_and_synthesize(tmp_path, capsys):
    code, out, _ = run(capsys, "sample-pk", "--k", "2", "--n", "2", "--seed", "4")
    assert code == 0 and out["depth"] == 2
    tree = tree_from_json(out["tree"])
    assert encode_polytope(tree_to_polytope(tree)) == out["polytope"]
    g = write(tmp_path, "g.json", out["tree"])
    h = write(tmp_path, "h.json", tree_to_json(Leaf((0, 0))))
    code, net, _ = run(capsys, "synthesize", g, h)
    assert code == 0 and net["hidden_layers"] == 2
    network_from_json({"input_dim": net["input_dim"], "layers": net["layers"]})


def test_check_qk(tmp_path, capsys):
    tri = write(tmp_path, "tri.json", encode_polytope(simplex(2)))
    big = write(tmp_path, "big.json", encode_polytope(dilate(simplex(2), 2)))
    code, out, _ = run(capsys, "check-qk", tri, "--k", "1")
    assert code == 0 and out["verdict"] == "non-member"
    code, out, _ = run(capsys, "check-qk", big, "--k", "1", "--short")
    assert code == 0 and out["verdict"] == "member" and out["mode"] == "short"


def test_certify(capsys):
    code, out, _ = run(capsys, "certify", "--k", "1", "--seed", "2", "--trials", "5")
    assert code == 0 and out["verdict"] == "certified" and out["seed"] == 2
    code, out, _ = run(capsys, "certify", "--k", "1", "--explore-double")
    assert code == 0 and out["qk_membership"] == "member"


def test_summary_format_and_out_file(tmp_path, capsys):
    path = write(tmp_path, "d2.json", encode_polytope(simplex(2)))
    code, out, _ = run(capsys, "volume", path, "--format", "summary")
    assert code == 0 and out.startswith("volume: ok") and "volume=1" in out
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "volume", path, "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["volume"] == 1


# ---- exit codes

def test_missing_seed_exits_2(tmp_path, capsys):
    tri = write(tmp_path, "tri.json", encode_polytope(simplex(2)))
    for argv in (["certify", "--k", "1"], ["sample-pk", "--k", "1", "--n", "2"], ["subdivide", "sum", tri, tri]):
        code, _, err = run(capsys, *argv)
        assert code == 2 and "--seed" in err


def test_schema_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "volume", str(bad))[0] == 2
    assert run(capsys, "volume", str(tmp_path / "missing.json"))[0] == 2
    rational = write(tmp_path, "r.json", {"vertices": [[0, 0], ["1/2", 0], [0, 1]]})
    assert run(capsys, "volume", rational)[0] == 2
    net = write(tmp_path, "net.json", SKIP_NET)
    assert run(capsys, "eval", net, "--point", "1,x")[0] == 2
    assert run(capsys, "eval", net, "--point", "1,2,3")[0] == 2
    assert run(capsys, "certify", "--k", "7", "--seed", "0")[0] == 2
    assert run(capsys, "volume", net, "--max-dim", "0")[0] == 2
    assert run(capsys, "certify", "--k", "1", "--seed", str(1 << 70))[0] == 2
    assert run(capsys, "volume")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_caps_exit_3(tmp_path, capsys):
    d4 = write(tmp_path, "d4.json", encode_polytope(simplex(4)))
    assert run(capsys, "volume", d4, "--max-dim", "3")[0] == 3
    cube = write(tmp_path, "cube.json", {"vertices": [[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)]})
    assert run(capsys, "msum", cube, cube, "--max-vertices", "5")[0] == 3


def test_verification_failure_exits_1(monkeypatch, capsys):
    body = {"verdict": "failed"}
    monkeypatch.setitem(cli.COMMANDS, "certify", lambda cfg: (body, False))
    code, out, _ = run(capsys, "certify", "--k", "1", "--seed", "0")
    assert code == 1 and out["verdict"] == "failed"


def test_outputs_are_byte_identical(tmp_path, capsys):
    tri = write(tmp_path, "tri.json", encode_polytope(simplex(2)))
    outs = []
    for _ in range(2):
        cli.main(["subdivide", "conv", tri, tri, "--seed", "99"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_console_script_runs(tmp_path):
    exe = shutil.which("newton-depth")
    cmd = [exe] if exe else [sys.executable, "-m", "newton_depth.cli"]
    path = write(tmp_path, "d3.json", encode_polytope(simplex(3)))
    proc = subprocess.run(cmd + ["volume", path], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["volume"] == 1
