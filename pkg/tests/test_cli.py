import json
import subprocess
import sys

import pytest

from conftest import CORPUS, DATA
from uext.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ue_check(capsys):
    code, out, _ = run(capsys, "ue-check", DATA / "tiny.frame")
    assert code == 0 and "A^ue ≅ A" in out


def test_modal_valid_counterexample(capsys):
    code, out, _ = run(capsys, "modal", "valid", DATA / "fan.frame", "<>p -> p")
    assert code == 1 and "Counterexample" in out and "p=" in out


def test_extend_then_criterion(capsys, tmp_path):
    target = tmp_path / "fanext.abp"
    code, _, _ = run(capsys, "extend", DATA / "fan.abp", "-o", target)
    assert code == 0 and target.exists()
    code, out, _ = run(capsys, "criterion", target, "--alt", "1")
    assert code == 1 and "Invalid" in out and "at h" in out


def test_criterion_on_k_presentation(capsys, tmp_path):
    target = tmp_path / "kext.abp"
    run(capsys, "extend", DATA / "k.abp", "-o", target)
    code, out, _ = run(capsys, "criterion", target, "--alt", "1", "--family")
    assert code == 0 and out.startswith("Valid")


def test_exit_codes(capsys):
    assert run(capsys, "validate", DATA / "fan.abp")[0] == 0
    assert run(capsys, "validate", DATA / "missing.abp")[0] == 2
    assert run(capsys, "modal", "valid", DATA / "tiny.frame", "p q")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "modal", "valid", DATA / "tiny.frame", "[]p -> p", "--max-val-bits", "2")[0] == 3
    assert run(capsys, "expand", DATA / "fan.abp", "-k", "80", "--max-frame-size", "10")[0] == 3
    assert run(capsys, "nbhd", DATA / "fan.abp", "h", "-k", "80", "--max-frame-size", "10")[0] == 3


def test_invalid_presentation_exit(capsys, tmp_path):
    bad = tmp_path / "bad.abp"
    bad.write_text("hub h\nblock a mult 2\n  pnode x\n  pflag out h x\n")
    code, out, _ = run(capsys, "validate", bad)
    assert code == 1 and "finite degree" in out
    assert run(capsys, "criterion", bad, "--alt", "1")[0] == 2


def test_json_report(capsys):
    code, out, _ = run(capsys, "modal", "valid", DATA / "tiny.frame", "p", "--json")
    doc = json.loads(out)
    assert code == 1 and doc["exit"] == 1 and doc["verdict"] == "Counterexample"
    assert list(doc["inputs"].values())[0] and doc["command"][:3] == ["uext", "modal", "valid"]
    assert "seconds" not in doc


def test_reports_are_deterministic(capsys):
    argv = ["criterion", DATA / "fan.abp", "--alt", "1", "--json"]
    assert run(capsys, *argv) == run(capsys, *argv)
    timed = run(capsys, "ue-check", DATA / "tiny.frame", "--timing")[1]
    assert timed.splitlines()[-1].startswith("time: ")


@pytest.mark.parametrize("name", CORPUS)
def test_fmt_idempotent(capsys, tmp_path, name):
    once = tmp_path / "once.abp"
    run(capsys, "fmt", DATA / f"{name}.abp", "-o", once)
    _, out, _ = run(capsys, "fmt", once)
    assert out == once.read_text()


def test_fmt_frame(capsys):
    _, out, _ = run(capsys, "fmt", DATA / "tiny.frame")
    assert out == "node a\nnode b\nnode c\nedge a b\nedge b c\nedge c a\n"


def test_misc_commands(capsys):
    assert run(capsys, "roads", DATA / "tiny.frame", "a", "c")[1].strip() == "a <- c"
    assert run(capsys, "roads", DATA / "fan.frame", "a", "b", "--relation", "S")[0] == 1
    code, out, _ = run(capsys, "delta", DATA / "tiny.frame", "--road", "a -> b -> c", "--set", "a,b")
    assert code == 0 and "Delta {c}" in out
    code, out, _ = run(capsys, "nbhd", DATA / "fan.frame", "a", "--match")
    assert "matching a b c" in out
    code, out, _ = run(capsys, "chi", DATA / "fan.abp", "a.0.x", "-n", "1", "--eval")
    assert code == 0 and "true at a.0.x a.1.x a.2.x" in out
    assert run(capsys, "modal", "alt", "1")[1].strip() == "[]p_0 | [](p_0 -> p_1)"
    assert run(capsys, "modal", "check", DATA / "tiny.frame", "a", "<>p", "--val", "p=b")[0] == 0
    code, out, _ = run(capsys, "counterexample", DATA / "fan.abp", "--hub", "h", "--alt", "1")
    assert code == 1 and "refuted at h" in out
    assert run(capsys, "bisim", DATA / "tiny.frame", DATA / "tiny.frame")[0] == 0
    assert run(capsys, "fo", "eval", DATA / "tiny.frame", "exists y. R(x,y)", "--assign", "x=a")[0] == 0
    assert run(capsys, "fo", "translate", "R(x,y)")[1].strip() == "S(x,y) | P(x,y)"
    assert run(capsys, "fo", "ef", DATA / "loops.abp", DATA / "loops.abp", "-q", "2")[0] == 0
    code, out, _ = run(capsys, "counts", DATA / "loops.abp", "--type", "a.x")
    assert "reflexive nonprincipal: powcont" in out and "points of type a.x: powcont" in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "uext.cli", "modal", "phi"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "p & ~q & [](p & q -> [](p & q)) & <>(p & q) -> [](p & q)"
