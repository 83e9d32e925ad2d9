"""Acceptance battery, one test per criterion.

The ``suite`` command runs twice; criteria 1 to 11 are read from the first
report and criterion 12 compares the two reports byte for byte, with the
wall-clock field removed.  Each test prints one PASS/FAIL line.
"""

import json
import re
import time

import pytest

from dilatation.cli import run

NAMES = {
    1: "axiom audit", 2: "euclidean tangent operations", 3: "heisenberg tangent operations",
    4: "curve calculus", 5: "length formula", 6: "radon-nikodym contrast",
    7: "pansu differentiation on rotating:0.5", 8: "equivalence of rotating structures",
    9: "chain rule", 10: "lookdown pair", 11: "transfer probe", 12: "determinism",
}
WALL_CLOCK = re.compile(rb'\n\s*"wall_clock_seconds": [^\n]*?(,?)\n')


@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    runs = []
    for tag in ("first", "second"):
        out = tmp_path_factory.mktemp(tag)
        start = time.perf_counter()
        code = run(["suite", "--seed", "0", "--out", str(out), "--quiet"])
        runs.append((code, out / "suite.json", time.perf_counter() - start))
    return runs


def _records(suite_runs, number):
    with open(suite_runs[0][1]) as fh:
        report = json.load(fh)
    prefix = f"{number} "
    return [r for r in report["records"] if r["report"].startswith(prefix)]


def _announce(capsys, number, ok, failures=()):
    detail = "" if ok else "  failing: " + ", ".join(
        f"{r['name']} (residual {r['residual']:.3g})" for r in failures)
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {NAMES[number]:<40} {'PASS' if ok else 'FAIL'}{detail}")


@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(number, suite_runs, capsys):
    records = _records(suite_runs, number)
    assert records, f"criterion {number} produced no checks"
    failures = [r for r in records if r["status"] != "pass"]
    _announce(capsys, number, not failures, failures)
    assert not failures, failures


def test_criterion_12_determinism(suite_runs, capsys):
    (code_a, path_a, secs_a), (code_b, path_b, secs_b) = suite_runs
    raw = [WALL_CLOCK.sub(rb"\1\n", p.read_bytes()) for p in (path_a, path_b)]
    ok = code_a == code_b and raw[0] == raw[1] and b"wall_clock_seconds" not in raw[0]
    _announce(capsys, 12, ok)
    with capsys.disabled():
        print(f"  suite wall clock: {secs_a:.1f} s and {secs_b:.1f} s")
    assert ok
    assert _records(suite_runs, 12)[0]["status"] == "pass"
