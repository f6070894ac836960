import json
import subprocess
import sys

import pytest

from bachlike.cli import main
from bachlike.suite import SCHEMA

SMALL = """\
[geometry]
names = RAND, S4
[suite]
ids = P-TRACE-V, P-WQUAD
ids.S4 = C-S4-R, S-SOLITON
samples = 3
include_grid = true
bach_line_samples = 3
[output]
path = report.json
"""


@pytest.fixture
def manifest(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_suite_passes(manifest, tmp_path, monkeypatch):
    monkeypatch.delenv("BACHLIKE_SUITE_SEED", raising=False)
    assert main(["suite", str(manifest)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["schema"] == SCHEMA == "v1"
    assert doc["exit_code"] == 0 and doc["summary"]["PASS"] == 4
    assert [r["id"] for r in doc["identities"]] == ["P-TRACE-V", "P-WQUAD", "C-S4-R", "S-SOLITON"]
    assert len(doc["regime_grid"]) == 81 and all(r["verdict"] == "PASS" for r in doc["bach_line"])
    assert doc["run"]["manifest"] == "small.ini"


def test_failure_exit_code(manifest, tmp_path):
    out = tmp_path / "tight.json"
    assert main(["suite", str(manifest), "--tolerance", "1e-300", "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["summary"]["FAIL"] >= 1 and doc["exit_code"] == 1


@pytest.mark.parametrize("argv", [
    ["suite", "{m}", "--jet-order", "9"],
    ["suite", "{d}/absent.ini"],
    ["grid", "{m}", "--quadrature", "1"],
    ["classify", "1", "1/0"],
])
def test_configuration_errors_exit_2(manifest, tmp_path, argv, capsys):
    argv = [a.format(m=manifest, d=tmp_path) for a in argv]
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_environment_overrides(manifest, tmp_path, monkeypatch):
    monkeypatch.setenv("BACHLIKE_SUITE_SAMPLES", "2")
    monkeypatch.setenv("BACHLIKE_OUTPUT_PATH", str(tmp_path / "env.json"))
    assert main(["suite", str(manifest)]) == 0
    doc = json.loads((tmp_path / "env.json").read_text())
    assert doc["run"]["samples"] == 2


def test_stdout_report(manifest, capsys):
    assert main(["grid", str(manifest), "--out", "-"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "identities" not in doc and len(doc["regime_grid"]) == 81


def test_classify(capsys):
    assert main(["classify", "1/2", "1/6"]) == 0
    v = json.loads(capsys.readouterr().out)
    assert v["regime"] == "BACH-LINE" and v["alpha"] == 0.5
    assert main(["classify", "0", "-2"]) == 0
    assert json.loads(capsys.readouterr().out)["regime"] == "V-ONLY"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "bachlike", "classify", "1", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["regime"] == "LAMBDA"
    r = subprocess.run([sys.executable, "-m", "bachlike"], capture_output=True, text=True)
    assert r.returncode == 2
