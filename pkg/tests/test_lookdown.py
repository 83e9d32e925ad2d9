import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilatation import curves as cv
from dilatation import lookdown as ld
from dilatation.core import PASS

P = ld.make_pair("heisenberg-euclidean")
small = st.floats(-0.4, 0.4)


def test_pairs():
    assert P.A.name == "heisenberg" and P.B.name == "heisenberg-flat"
    assert ld.make_pair("euclidean:3>=heisenberg").A.dim == 3
    with pytest.raises(ValueError):
        ld.make_pair("nope")
    with pytest.raises(ValueError):
        ld.make_pair("euclidean:2>=heisenberg")


@given(st.tuples(small, small, small), st.floats(0.01, 1.0))
def test_q_eps_closed_form(z, e):
    a, b, c = z
    assert np.allclose(ld.q_eps(P, np.zeros(3), e, z), [a, b, e * c], atol=1e-12)


def test_q_eps_examples():
    assert np.allclose(ld.q_eps(P, np.zeros(3), 0.3, [0.2, 0.4, 0.0]), [0.2, 0.4, 0])
    assert np.allclose(ld.q_eps(P, np.zeros(3), 1.0, [0.2, 0.4, 0.7]), [0.2, 0.4, 0.7])
    with pytest.raises(ValueError):
        ld.q_eps(P, np.zeros(3), 2.0, [1, 0, 0])


def test_gap_examples():
    x = np.zeros(3)
    assert abs(ld.distribution_gap(P, x, 0.1, [1, 0, 0])) < 1e-12
    assert ld.distribution_gap(P, x, 0.3, x) == 0
    expected = 17 ** 0.25 - math.sqrt(1 + 0.01 ** 2)
    assert ld.distribution_gap(P, x, 0.01, [1, 0, 1], radius=3.0) == pytest.approx(expected, abs=1e-6)
    with pytest.raises(ValueError):
        ld.distribution_gap(P, x, 0.01, [1, 0, 1])
    assert ld.in_distribution(P, x, 0.1, 1e-9, [1, 0, 0])


def test_identity_derivative_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(5):
        x, a = rng.uniform(-0.5, 0.5, (2, 3))
        est = ld.identity_derivative(P, x, ld.translate(x, a))
        want = x + np.array([a[0], a[1], (x[0] * a[1] - x[1] * a[0]) / 2])
        assert est.converged and np.allclose(est.value, want, atol=1e-6)


def test_projector():
    rep = ld.check_projector(P, [0.1, -0.2, 0.3], samples=5)
    assert rep.passed and rep["idempotent"].residual < 1e-9


def test_condition_c():
    x = np.zeros(3)
    rep = ld.check_condition_c(P, x, lambda e: np.array([1.0, 0.0, e]))
    assert rep.passed and rep.info["gap_vanishes"] and rep.info["vertical_vanishes"]
    # vertical part 2 sqrt(eps (1 - eps)) ~ 2 eps^(1/2)
    assert abs(rep.info["fit_power"] - 0.5) < 0.05
    assert abs(rep.info["fit_coefficient"] - 2) < 0.2
    flat = ld.check_condition_c(P, x, lambda e: np.array([1.0, 0.0, 0.0]))
    assert flat.passed and max(abs(g) + abs(v) for _, g, v in flat.info["trace"]) < 1e-12
    vac = ld.check_condition_c(P, x, lambda e: np.array([1.0, 0.0, 1.0]), radius=3.0)
    assert vac.passed and vac.checks[0].detail["hypothesis"] == "not met"


def test_condition_a():
    assert ld.check_condition_a(P, samples=100).passed
    rev = ld.check_condition_a(ld.make_pair("euclidean-heisenberg"), samples=100)
    assert not rev.passed and rev.checks[0].witness is not None


def test_audit():
    rep = ld.lookdown_audit(P, samples=8, radius=0.5)
    assert rep.passed, rep.summary()
    assert not ld.lookdown_audit(ld.make_pair("euclidean-heisenberg"), samples=8).passed


def test_transfer_line():
    rep = ld.transfer_probe(P, cv.heisenberg_line(), t_samples=20)
    assert rep.passed, rep.summary()
    assert rep.info["max_derivative_mismatch"] < 1e-5


def test_transfer_refuses_non_lipschitz():
    with pytest.raises(ValueError):
        ld.transfer_probe(P, cv.vertical_segment(), t_samples=5)
