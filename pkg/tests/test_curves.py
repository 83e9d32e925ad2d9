import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilatation import curves as cv
from dilatation.core import PASS
from dilatation.limits import OSCILLATING
from dilatation.structures import make_structure

E1, E2 = make_structure("euclidean:1"), make_structure("euclidean:2")
H = make_structure("heisenberg")
R = make_structure("rotating:0.5")


def constant():
    return cv.Curve(0.0, 1.0, lambda t: np.zeros((len(t), 2)) + [0.3, 0.4], name="constant")


def test_curve_evaluation():
    c = cv.segment([1.0, 2.0])
    assert c(0.5).shape == (2,) and c(np.array([0.0, 1.0])).shape == (2, 2)
    with pytest.raises(ValueError):
        c(1.5)
    with pytest.raises(ValueError):
        cv.Curve(1.0, 0.0, lambda t: t[:, None])
    with pytest.raises(ValueError):
        cv.make_curve("nope")


def test_csv_curve(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("0,0,0\n1,3,4\n")
    c = cv.make_curve(str(path))
    assert cv.variation(c, E2) == pytest.approx(5.0)


def test_variation_examples():
    assert abs(cv.variation(cv.sign_curve(), E2) - 4) < 1e-5
    assert cv.variation(constant(), E2) == 0
    v = cv.variation(cv.cantor_staircase(12), E1)
    assert 0.999 <= v <= 1.0
    det = cv.variation_details(cv.corner_polyline(), E2)
    assert det.exact and det.value == pytest.approx(1 + 2 + 2 + 1)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 3))
@settings(max_examples=20)
def test_segment_variation(vx, vy, speed):
    v = np.array([vx, vy])
    c = cv.segment(v, speed=speed)
    assert cv.variation(c, E2) == pytest.approx(speed * np.linalg.norm(v), rel=1e-9, abs=1e-12)


def test_upper_dilatation():
    kink = cv.Curve(-1.0, 1.0, lambda t: np.stack([t, np.abs(t)], -1), name="kink")
    assert cv.upper_dilatation(kink, 0.0, E2) == pytest.approx(math.sqrt(2), abs=1e-3)
    assert cv.upper_dilatation(cv.segment([3.0, 4.0]), 0.4, E2) == pytest.approx(5.0, rel=1e-9)
    assert cv.upper_dilatation(constant(), 0.5, E2) == 0
    assert math.isinf(cv.upper_dilatation(cv.sign_curve(), 0.0, E2))


def test_metric_derivative():
    assert cv.metric_derivative(cv.segment([3.0, 4.0]), 0.3, E2).value == pytest.approx(5.0)
    cc = cv.reparametrize_arclength(cv.circle(), E2)
    assert cv.metric_derivative(cc, 1.0, E2).value == pytest.approx(1.0, abs=1e-6)
    assert cv.metric_derivative(cv.heisenberg_line(), 0.2, H).value == pytest.approx(1.0)


def test_lengths():
    assert cv.length_via_dilatation(cv.circle(), E2) == pytest.approx(2 * math.pi, rel=1e-4)
    assert cv.length_via_dilatation(cv.segment([3.0, 4.0]), E2) == pytest.approx(5.0)
    assert cv.length_via_dilatation(cv.sign_curve(), E2) == pytest.approx(4.0, abs=1e-5)
    path = cv.hausdorff_length_estimate(cv.sign_curve(), E2, mesh=1e-4)
    assert abs(path - 2) < 1e-2
    assert cv.hausdorff_length_estimate(cv.segment([1.0, 1.0]), E2) == pytest.approx(math.sqrt(2), rel=1e-6)


def test_cantor_function():
    assert cv.cantor_function(np.array([0.0, 1 / 3, 0.5, 2 / 3, 1.0]), 3) == pytest.approx(
        [0, 0.5, 0.5, 0.5, 1])
    # the depth-m approximant is within 2**-m of the Cantor function
    assert cv.cantor_function(0.25, 12) == pytest.approx(1 / 3, abs=2.0 ** -12)
    t = np.linspace(0, 1, 1001)
    assert np.all(np.diff(cv.cantor_function(t, 8)) >= 0)


def test_deeper_cantor_graph_length():
    # the depth-14 approximant is within the tolerance the depth-12 one misses
    glen = cv.hausdorff_length_estimate(cv.cantor_graph(14), E2, mesh=3.0 ** -14)
    assert abs(glen - 2) < 5e-3


@pytest.mark.parametrize("S, c", [(E2, cv.circle()), (E2, cv.corner_polyline()),
                                  (H, cv.heisenberg_circle_lift()), (R, cv.segment([1.0, 0.0]))])
def test_length_equals_variation(S, c):
    L, V = cv.length_via_dilatation(c, S), cv.variation(c, S)
    assert abs(L - V) / V < 1e-3


def test_reparametrize():
    c = cv.segment([1.0, 1.0], speed=2.0)
    cc = cv.reparametrize_arclength(c, E2)
    assert cc.b == pytest.approx(2 * math.sqrt(2), rel=1e-9)
    fast = cv.reparametrize_arclength(cv.circle(speed=3.0), E2)
    s = np.linspace(0, fast.b, 9)
    assert np.allclose(np.linalg.norm(fast(s), axis=-1), 1.0)
    assert np.allclose(np.diff(s), [cv.variation(cv.Curve(a, b, fast.func), E2)
                                    for a, b in zip(s[:-1], s[1:])], rtol=1e-6)
    unit = cv.segment([1.0, 0.0])
    same = cv.reparametrize_arclength(unit, E2)
    t = np.linspace(0, 1, 11)
    assert np.allclose(same(t), unit(t), atol=1e-9)


def test_derivative_examples():
    r = cv.derivative_at(cv.segment([1.0, 0.0], start=[-1.0, 0.0], a=0, b=2), 1.0, E2)
    assert r.derivable and np.allclose(r.forward.value, [1, 0])
    r = cv.derivative_at(cv.heisenberg_line(), 0.0, H)
    assert r.derivable and np.allclose(r.forward.value, [1, 0, 0])
    r = cv.derivative_at(cv.segment([1.0, 0.0], start=[-1.0, 0.0], a=0, b=2), 1.0, R)
    assert not r.derivable and r.forward.status == OSCILLATING


def test_rn_probe_contrast():
    good = cv.rn_probe(E2, cv.corner_polyline(), 100)
    assert good.info["fraction"] >= 0.97 and good.checks[0].status == PASS
    bad = cv.rn_probe(R, cv.segment([1.0, 0.0]), 40, threshold=0.95)
    assert bad.info["fraction"] <= 0.05 and not bad.passed
    assert bad.checks[0].witness is not None


def test_length_formula():
    assert cv.length_formula_check(E2, cv.segment([0.6, 0.8])).passed
