import json
from pathlib import Path

import pytest

from llg import symexpr as sx
from llg.cli import main
from llg.forms import FormOnT, NonlinearForm
from llg.geometry import GroupLaw, Splitting, StructureConstants
from llg.io import ConfigError, form_to_toml, load_definition, load_form

INPUTS = Path(__file__).resolve().parent.parent / "inputs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, text, name="in.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_each_kind():
    assert isinstance(load_definition(INPUTS / "heisenberg.toml"), GroupLaw)
    assert isinstance(load_definition(INPUTS / "nonintegrable.toml"), Splitting)
    c = load_definition(INPUTS / "sl2.toml")
    assert isinstance(c, StructureConstants)
    assert c[1, 0, 1] == 2 and c[1, 1, 0] == -2


def test_load_forms():
    th = load_form(INPUTS / "two_point_function.toml", 3)
    assert isinstance(th, NonlinearForm) and th.copies == 2
    om = load_form(INPUTS / "tangent_one_form.toml", 3)
    assert isinstance(om, FormOnT) and om.degree == 1
    assert om[(2,)] is sx.parse("x1*xi2 - xi3", 3, slots=1)


def test_unsorted_form_keys_flip_sign(tmp_path):
    p = write(tmp_path, '[form]\ndegree = 2\ncopies = 1\n[form.components]\n"2,1" = "x1"\n')
    f = load_form(p, 2)
    assert f[(0, 1)] is sx.parse("-x1", 2)


def test_form_round_trip(tmp_path):
    om = load_form(INPUTS / "tangent_one_form.toml", 3)
    back = load_form(write(tmp_path, form_to_toml(om)), 3)
    assert back.comps == om.comps


@pytest.mark.parametrize("text,match", [
    ("[group]\ndim = 2\nmultiplication = ['x1 + y1']\ninverse = ['-x1', '-x2']\nidentity = [0, 0]\n", "multiplication"),
    ("[group]\ndim = 1\nmultiplication = ['x1 + y1 +']\ninverse = ['-x1']\nidentity = [0]\n", "position"),
    ("[group]\ndim = 1\nvariables = ['a']\nmultiplication = ['x1 + y1']\ninverse = ['-x1']\nidentity = [0]\n", "variables"),
    ("[group]\ndim = 1\nmultiplication = ['x1*y1']\ninverse = ['1/x1']\nidentity = [1]\nconstraints = ['x1 > 0']\n", "!= 0"),
    ("[splitting]\ndim = 2\nepsilon = [['1', '0']]\n", "epsilon"),
    ("[algebra]\ndim = 2\nbrackets = ['1 2']\n", "bracket"),
    ("[group]\ndim = 1\n[algebra]\ndim = 1\n", "exactly one"),
    ("not toml = = 1", "in.toml"),
])
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_definition(write(tmp_path, text))


def test_check_exit_codes(capsys):
    code, out, _ = run(capsys, "check", "--builtin", "heisenberg3")
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["schema"] == 1
    code, out, _ = run(capsys, "check", "--input", str(INPUTS / "nonintegrable.toml"))
    report = json.loads(out)
    assert code == 1
    failing = [r for r in report["records"] if r["verdict"] == "fail"]
    assert failing and all("witness" in r["check"] for r in failing)


def test_transcendental_needs_float(capsys):
    code, _, err = run(capsys, "check", "--input", str(INPUTS / "expgroup.toml"))
    assert code == 2 and "--mode float" in err
    code, _, _ = run(capsys, "check", "--input", str(INPUTS / "expgroup.toml"), "--mode", "float")
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["check", "--builtin", "nosuchgroup"],
    ["check"],
    ["check", "--builtin", "affine2", "--trials", "0"],
    ["cohomology", "--builtin", "affine2", "--coefficients", "spin"],
    ["cohomology", "--input", str(INPUTS / "nonintegrable.toml")],
    ["derive", "--input", str(INPUTS / "sl2.toml"), "--what", "gamma"],
    ["op", "--builtin", "heisenberg3", "--apply", "dhat", "--form", str(INPUTS / "two_point_function.toml")],
])
def test_config_error_exit_code(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("llg: configuration error")


def test_derive_torsion(capsys):
    code, out, _ = run(capsys, "derive", "--builtin", "heisenberg3", "--what", "torsion")
    res = json.loads(out)["result"]["tilde"]
    assert code == 0
    assert res == [{"index": [3, 1, 2], "expr": "1"}, {"index": [3, 2, 1], "expr": "-1"}]


def test_derive_structure_constants(capsys):
    code, out, _ = run(capsys, "derive", "--builtin", "affine2", "--what", "structure-constants")
    assert code == 0
    assert json.loads(out)["result"]


def test_op_delta(capsys):
    code, out, _ = run(capsys, "op", "--builtin", "heisenberg3", "--apply", "delta",
                       "--form", str(INPUTS / "two_point_function.toml"))
    res = json.loads(out)["result"]
    assert code == 0 and res["copies"] == 3
    got = sx.parse(res["components"][""], 3, copies=3)
    # theta(y, z) - theta(x, z) + theta(x, y) with theta(x, y) = y1*y3 - x2*y1
    want = sx.parse("(z1*z3 - y2*z1) - (z1*z3 - x2*z1) + (y1*y3 - x2*y1)", 3, copies=3)
    assert sx.equiv_random(got, want).equal


def test_op_dhat_on_tangent_form(capsys):
    code, out, _ = run(capsys, "op", "--builtin", "abelian:3", "--apply", "dhat",
                       "--form", str(INPUTS / "tangent_one_form.toml"))
    res = json.loads(out)["result"]
    assert code == 0 and res["degree"] == 2


def test_cohomology_command(capsys):
    code, out, _ = run(capsys, "cohomology", "--builtin", "heisenberg3", "--coefficients", "adjoint")
    rep = json.loads(out)
    assert code == 0 and rep["dims"] == [1, 4, 5, 2] and rep["routes_agree"]
    code, out, _ = run(capsys, "cohomology", "--input", str(INPUTS / "sl2.toml"), "--complex", "ce")
    assert json.loads(out)["dims"] == [1, 0, 0, 1]


def test_markdown_output(capsys, tmp_path):
    target = tmp_path / "r.md"
    code, out, _ = run(capsys, "cohomology", "--builtin", "affine2", "--format", "markdown", "--out", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert "| ilhc | trivial | horizontal | 1 | 1 | 0 |" in text and "routes agree" in text
    code, out, _ = run(capsys, "check", "--builtin", "affine2", "--format", "markdown")
    assert "| check | anchor | verdict | detail |" in out


def test_verify_is_deterministic_across_workers(capsys):
    outs = []
    for workers in ("1", "1", "4"):
        code, out, _ = run(capsys, "verify", "--builtin", "affine2", "--suite", "double", "--instances", "2",
                           "--seed", "3", "--workers", workers)
        outs.append(out)
    assert code == 0
    assert outs[0] == outs[1] == outs[2]
