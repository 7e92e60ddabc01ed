import json
import shutil
import subprocess

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratloop import io
from ratloop.cli import run_command
from ratloop.elements import make_p, product_loop
from ratloop.errors import ParseError
from ratloop.linalg import Subspace, eye
from ratloop.loops import RationalLoop
from ratloop.poly import Poly
from ratloop.sampling import random_loop
from ratloop.scalars import I, S, TowerScalar

ID_TEXT = ('{"entries":[[{"den":["1/1"],"num":["1/1"]},{"den":["1/1"],"num":[]}],'
           '[{"den":["1/1"],"num":[]},{"den":["1/1"],"num":["1/1"]}]],"n":2}\n')


def write(path, obj):
    path.write_text(io.dumps(obj))
    return str(path)


def test_identity_canonical_text():
    assert io.dumps(io.encode_loop(RationalLoop.identity(2))) == ID_TEXT
    assert io.decode_loop(json.loads(ID_TEXT)) == RationalLoop.identity(2)


rationals = st.fractions(max_denominator=50).map(lambda f: (f.numerator, f.denominator))


@settings(max_examples=50, deadline=None)
@given(rationals, rationals, rationals)
def test_scalar_roundtrip(a, b, c):
    x = S(*a[:1]) / a[1] + I * b[0] / b[1] + TowerScalar.radical(3, 1) * c[0] / c[1]
    assert io.decode_scalar(json.loads(io.dumps(io.encode_scalar(x)))) == x


def test_sqrt3_factor_roundtrip():
    r3 = TowerScalar.radical(3)
    V, W = Subspace(2, [(S(1), r3)]), Subspace(2, [(S(0), S(1))])
    el = make_p(r3, -r3, V, W)
    n, back = io.decode_factors(json.loads(io.dumps(io.encode_factors([el], 2))))
    assert n == 2 and product_loop(back, 2) == el.loop


def test_malformed_input_reports_location(tmp_path):
    with pytest.raises(ParseError, match=r"\$\.entries"):
        io.decode_loop({"n": 2, "entries": [[{"den": ["1/1"], "num": ["x"]}]]})
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2,')
    assert run_command(["factor", "-i", str(bad), "-o", str(tmp_path / "o.json")]) == 2
    assert run_command(["factor", "-i", str(tmp_path / "missing.json"), "-o", str(tmp_path / "o.json")]) == 5
    assert run_command(["soliton", "mkdv", "--params", "alpha", "-o", str(tmp_path / "s.csv")]) == 2
    assert run_command(["bogus"]) == 2


def test_verify_identity(tmp_path, capsys):
    src = tmp_path / "id.json"
    src.write_text(ID_TEXT)
    assert run_command(["verify", "-i", str(src), "--reality", "glnr"]) == 0
    assert "glnr: ok" in capsys.readouterr().out


def test_verify_reports_failure(tmp_path):
    g = make_p(I, S(2), Subspace(2, [(S(1), S(0))]), Subspace(2, [(S(0), S(1))])).loop
    assert run_command(["verify", "-i", write(tmp_path / "g.json", io.encode_loop(g)), "--reality", "glnr"]) == 1


@pytest.mark.parametrize("group", ["glnr", "upq(1,2)"])
def test_factor_multiply_roundtrip_is_byte_identical(tmp_path, rng, group):
    if group == "glnr":
        _, g = random_loop(rng, "glnr", 3, count=3)
    else:
        _, g = random_loop(rng, "upq", 3, count=3, signature=(1, 2))
    src = write(tmp_path / "g.json", io.encode_loop(g))
    assert run_command(["factor", "--group", group, "-i", src, "-o", str(tmp_path / "f.json")]) == 0
    assert run_command(["multiply", "-i", str(tmp_path / "f.json"), "-o", str(tmp_path / "back.json")]) == 0
    assert (tmp_path / "back.json").read_text() == (tmp_path / "g.json").read_text()


def test_factor_signature_mismatch(tmp_path):
    src = tmp_path / "id.json"
    src.write_text(ID_TEXT)
    assert run_command(["factor", "--group", "upq(2,2)", "-i", str(src), "-o", str(tmp_path / "o.json")]) == 2


def test_irreducible_denominator_exit(tmp_path):
    cubic = ["-2/1", "0/1", "0/1", "1/1"]
    g = {"n": 2, "entries": [[{"den": cubic, "num": cubic}, {"den": cubic, "num": ["1/1"]}],
                             [{"den": ["1/1"], "num": []}, {"den": ["1/1"], "num": ["1/1"]}]]}
    assert run_command(["factor", "-i", write(tmp_path / "g.json", g), "-o", str(tmp_path / "o.json")]) == 4


def test_dress_modes(tmp_path):
    f = RationalLoop.constant([[S(1), S(0)], [S(0), S(1)]])
    fsrc = write(tmp_path / "f.json", io.encode_loop(f))
    nsrc = write(tmp_path / "N.json", io.encode_matrix([[S(0), S(1)], [S(0), S(0)]]))
    for mode, keys in (("simple", {"N_tilde"}), ("order2", {"M1", "M2"})):
        out = tmp_path / f"{mode}.json"
        assert run_command(["dress", "--mode", mode, "--alpha", "1", "--N", nsrc, "-i", fsrc, "-o", str(out)]) == 0
        assert set(json.loads(out.read_text())) == keys | {"dressed"}
    lam2 = Poly([S(0), S(0), S(1)])
    g = RationalLoop.from_parts(2, [(Poly.const(1), eye(2)), (lam2, [[S(1), S(1)], [S(1), S(1)]])], {})
    out = tmp_path / "pair.json"
    assert run_command(["dress", "--mode", "pair", "--alpha", "1", "--N", nsrc,
                        "-i", write(tmp_path / "g.json", io.encode_loop(g)), "-o", str(out)]) == 0
    res = json.loads(out.read_text())
    assert set(res) == {"N_tilde", "N_tilde_prime", "dressed"}
    dressed = io.decode_loop(res["dressed"])
    assert dressed.principal_part(S(1)) == {} and dressed.principal_part(S(-1)) == {}


def test_dress_pair_not_well_defined(tmp_path):
    fsrc = write(tmp_path / "f.json", io.encode_loop(RationalLoop.identity(2)))
    nsrc = write(tmp_path / "N.json", io.encode_matrix([[S(0), 2 * I], [S(0), S(0)]]))
    assert run_command(["dress", "--mode", "pair", "--alpha", "1", "--N", nsrc, "-i", fsrc,
                        "-o", str(tmp_path / "o.json")]) == 3


def test_soliton_mkdv_report(tmp_path):
    rep = tmp_path / "r.json"
    assert run_command(["soliton", "mkdv", "--params", "alpha=1,n2=2", "-o", str(tmp_path / "s.csv"),
                        "--residual-report", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert report["flow"] == "mkdv" and report["max_residual"] <= 1e-5
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "x,t,u_00,u_01,u_10,u_11,masked"


def test_egoroff_command(tmp_path):
    nsrc = write(tmp_path / "N.json", io.encode_matrix([[S(0), S(1)], [S(0), S(0)]]))
    rep = tmp_path / "r.json"
    assert run_command(["egoroff", "--alpha", "1", "--N", nsrc, "--c", "1,2", "--grid=-1,1,11",
                        "-o", str(tmp_path / "h.csv"), "--report", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert report["max_residual"] < 1e-8 and report["projection"] in ("offdiag", "trace_free")
    assert report["rotation"] < 1e-8 and report["d_invariance"] < 1e-8


@pytest.mark.skipif(shutil.which("ratloop") is None, reason="console script not installed")
def test_console_script(tmp_path):
    src = tmp_path / "id.json"
    src.write_text(ID_TEXT)
    proc = subprocess.run(["ratloop", "verify", "-i", str(src), "--reality", "glnr"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "glnr: ok\n"
