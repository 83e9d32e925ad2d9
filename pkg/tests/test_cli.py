import csv
import json

import pytest

from dilatation.cli import ExperimentConfig, UsageError, run


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("DILATATION_OUTPUT_DIR", str(tmp_path / "env"))
    return tmp_path


def load(path):
    with open(path) as fh:
        return json.load(fh)


def test_audit_passes(out):
    assert run(["audit", "--structure", "euclidean:2", "--samples", "5", "--quiet"]) == 0
    rep = load(out / "env" / "audit.json")
    assert rep["passed"] and rep["command"] == "audit" and rep["config"]["samples"] == 5
    for key in ("artifact", "version", "records", "info", "wall_clock_seconds"):
        assert key in rep


def test_failure_carries_witness(out):
    code = run(["audit", "--structure", "contracting:2", "--samples", "5", "--out", str(out), "--quiet"])
    assert code == 1
    rep = load(out / "audit.json")
    bad = [r for r in rep["records"] if r["status"] != "pass"]
    assert bad and all(r["witness"] is not None for r in bad)


@pytest.mark.parametrize("argv", [
    ["audit", "--structure", "nope"], ["tangent", "--op", "bogus"], ["frobnicate"],
    ["curve", "--structure", "euclidean:2", "--curve", "nope"],
    ["tangent", "--structure", "euclidean:2", "--x", "1,2,3"],
    ["audit", "--eps0", "-1"], ["diff", "--op", "equiv"],
    ["lookdown", "--op", "transfer", "--curve", "vertical"],
    ["curve", "--structure", "euclidean:2", "--curve", "heisenberg-line"],
])
def test_usage_errors(out, argv):
    assert run(argv + ["--quiet"] if argv[0] != "frobnicate" else argv) == 2


def test_tangent_csv(out):
    code = run(["tangent", "--structure", "heisenberg", "--x", "0,0,0", "--u", "1,0,0",
                "--v", "0,1,0", "--out", str(out), "--quiet"])
    assert code == 0
    with open(out / "tangent.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["x0", "x1", "x2"] and rows[0][-2:] == ["residual", "status"]
    assert len(rows) == 31 and rows[-1][-1] == "converged"
    value = load(out / "tangent.json")["records"][0]["detail"]["value"]
    assert value == pytest.approx([-1, 1, -0.5], abs=1e-6)


def test_curve_and_lookdown_traces(out):
    assert run(["curve", "--structure", "rotating:0.5", "--curve", "segment", "--op", "rn",
                "--samples", "10", "--out", str(out), "--quiet"]) == 1
    assert run(["lookdown", "--op", "condc", "--out", str(out), "--quiet"]) == 0
    with open(out / "lookdown.csv") as fh:
        assert next(csv.reader(fh)) == ["eps", "gap", "vertical"]


def test_diff_commands(out):
    base = ["--out", str(out), "--quiet"]
    assert run(["diff", "--structure", "rotating:0.5", "--map", "square", "--x", "1,0", "--u", "1.2,0.1"] + base) == 0
    assert run(["diff", "--structure", "rotating:0.5", "--map", "conjugate", "--op", "derive",
                "--x", "1,0", "--u", "1.2,0.1"] + base) == 1
    assert run(["diff", "--structure", "rotating:0.3", "--structure2", "rotating:0.7",
                "--op", "equiv", "--samples", "3"] + base) == 1


def test_config_roundtrip(out):
    cfg = ExperimentConfig(command="curve", structure="heisenberg", tol=1e-7, seed=4)
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    with pytest.raises(UsageError):
        ExperimentConfig.from_text("bogus = 1\n")
    path = out / "run.cfg"
    assert run(["audit", "--structure", "rotating:0.5", "--samples", "4", "--write-config", str(path),
                "--out", str(out), "--quiet"]) == 0
    assert run(["audit", "--config", str(path), "--seed", "2", "--out", str(out), "--quiet"]) == 0
    cfg = load(out / "audit.json")["config"]
    assert cfg["structure"] == "rotating:0.5" and cfg["samples"] == 4 and cfg["seed"] == 2


def test_json_is_deterministic(out):
    argv = ["tangent", "--structure", "heisenberg", "--op", "sum", "--samples", "3", "--quiet"]
    reports = []
    for sub in ("a", "b"):
        assert run(argv + ["--out", str(out / sub)]) == 0
        rep = load(out / sub / "tangent.json")
        rep.pop("wall_clock_seconds")
        reports.append(rep)
    assert reports[0] == reports[1]
