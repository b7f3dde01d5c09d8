from __future__ import annotations

import json
import subprocess
import sys

import pytest

from revmiter.circuit import read_circuit_file
from revmiter.cli import main


@pytest.fixture
def files(tmp_path):
    def gen(*argv):
        path = tmp_path / ("_".join(argv).replace("-", "") + ".real")
        assert main(["gen", *argv, "-o", str(path)]) == 0
        return str(path)
    return gen


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_adder_header(files):
    text = open(files("adder", "--n", "32")).read()
    assert ".numvars 66" in text


def test_check_exit_codes(files, tmp_path, capsys):
    a = files("adder", "--n", "32")
    d1 = str(tmp_path / "d1.real")
    assert main(["mutate", a, "--mode", "diff1", "--seed", "7", "-o", d1]) == 0
    code, out, _ = run(capsys, "check", a, a, "--method", "bdd")
    assert code == 0 and "verdict: Equivalent" in out
    code, out, _ = run(capsys, "check", a, d1, "--method", "sat")
    assert code == 1 and "counterexample: " in out
    code, out, _ = run(capsys, "check", a, d1, "--method", "cec", "--format", "json-lines")
    rep = json.loads(out)
    assert code == 1 and rep["verdict"] == "NotEquivalent" and len(rep["counterexample"]) == 66
    assert rep["seed"] == 2024


def test_check_qft_adaptive_trace(files, capsys):
    q = files("qft", "--n", "8")
    code, out, _ = run(capsys, "check", q, q, "--method", "adaptive", "--format", "json-lines")
    rep = json.loads(out)
    assert code == 0
    assert rep["trace"][-1]["step"] == 2 and rep["trace"][-1]["gates_after"] == 0


def test_auto_method_and_variant(files, tmp_path, capsys):
    q = files("qft", "--n", "3")
    code, out, _ = run(capsys, "check", q, q, "--format", "json-lines", "--variant", "auto")
    assert code == 0 and json.loads(out)["method"] == "adaptive"
    a = files("adder", "--n", "3")
    code, out, _ = run(capsys, "check", a, a, "--format", "json-lines")
    assert code == 0 and json.loads(out)["method"] == "cec"


def test_quantum_method_witness(files, tmp_path, capsys):
    q = files("qft", "--n", "4")
    d = str(tmp_path / "dq.real")
    assert main(["mutate", q, "--mode", "middelete", "--count", "1", "-o", d]) == 0
    code, out, _ = run(capsys, "check", q, d, "--method", "quantum", "--format", "json-lines")
    rep = json.loads(out)
    assert code == 1 and rep["witness"] is not None and rep["counterexample"] is None


def test_errors_exit_2(files, tmp_path, capsys):
    a = files("adder", "--n", "2")
    b = files("adder", "--n", "3")
    code, out, err = run(capsys, "check", a, b)
    assert code == 2 and out == "" and "width mismatch" in err
    bad = tmp_path / "bad.real"
    bad.write_text(".numvars 2\n.variables a b\n.begin\nt2 a z\n.end\n")
    code, out, err = run(capsys, "check", str(bad), str(bad))
    assert code == 2 and "error" in err
    q = files("qft", "--n", "2")
    code, _, err = run(capsys, "check", q, q, "--method", "sat")
    assert code == 2 and "conventional" in err
    code, _, _ = run(capsys, "check", q, q, "--rounds", "0")
    assert code == 2
    code, _, _ = run(capsys, "check", a, str(tmp_path / "missing.real"))
    assert code == 2


def test_timeout_gives_inconclusive(files, capsys):
    g1 = files("grover", "--n", "2")
    g2 = files("grover-permuted", "--n", "2")
    code, out, _ = run(capsys, "check", g1, g2, "--timeout", "0")
    assert code == 2 and "Inconclusive" in out
    code, out, _ = run(capsys, "check", g1, g2, "--method", "adaptive")
    assert code == 0 and "step 7" in out


def test_simplify_command(files, tmp_path, capsys):
    q = files("qft", "--n", "5")
    m = str(tmp_path / "m.real")
    assert main(["miter", q, q, "-o", m]) == 0
    s1, s2 = str(tmp_path / "s1.real"), str(tmp_path / "s2.real")
    code, out, _ = run(capsys, "simplify", m, "-o", s1)
    assert code == 0 and "reductions: 34" in out
    assert len(read_circuit_file(s1)) == 0
    assert ".begin\n.end" in open(s1).read()
    code, out, _ = run(capsys, "simplify", s1, "-o", s2, "--format", "json-lines")
    assert json.loads(out)["reductions"] == 0
    code, _, _ = run(capsys, "simplify", m, "-o", s1, "--rounds", "0")
    assert code == 2


def test_mutate_deterministic(files, tmp_path):
    a = files("adder", "--n", "4")
    o1, o2 = tmp_path / "o1.real", tmp_path / "o2.real"
    for o in (o1, o2):
        assert main(["mutate", a, "--mode", "diff1", "--seed", "7", "-o", str(o)]) == 0
    assert o1.read_bytes() == o2.read_bytes()


def test_stats(files, capsys):
    code, out, _ = run(capsys, "stats", files("qft", "--n", "4"))
    assert code == 0 and "properly-quantum: yes" in out and "width: 4" in out
    code, out, _ = run(capsys, "stats", files("adder", "--n", "2"), "--format", "json-lines")
    d = json.loads(out)
    assert d["properly_quantum"] is False and d["gates"] == 19


@pytest.mark.parametrize("kind,n,width", [("multiplier", 4, 20), ("lnn", 5, 5), ("mesh", 4, 4),
                                          ("qft", 3, 3), ("grover", 2, 11)])
def test_gen_kinds(files, kind, n, width):
    assert read_circuit_file(files(kind, "--n", str(n))).width == width


def test_external_solver_flag(tmp_path, capsys):
    from pathlib import Path
    solver = Path(__file__).parent / "data" / "brute_solver.py"
    a, b = tmp_path / "a.real", tmp_path / "b.real"
    a.write_text(".numvars 2\n.variables a b\n.begin\nt2 a b\n.end\n")
    b.write_text(".numvars 2\n.variables a b\n.begin\nt1 b\n.end\n")
    code, out, _ = run(capsys, "check", str(a), str(b), "--method", "sat", "--no-simplify",
                       "--solver-cmd", f"{sys.executable} {solver} {{file}}")
    assert code == 1 and "counterexample" in out
    code, _, _ = run(capsys, "check", str(a), str(a), "--method", "sat", "--no-simplify",
                     "--solver-cmd", f"{sys.executable} {solver} {{file}}")
    assert code == 0


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "revmiter.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "revmiter" in r.stdout
    r = subprocess.run([sys.executable, "-m", "revmiter.cli"], capture_output=True, text=True)
    assert r.returncode == 2
