import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dilatation.limits import (CONVERGED, DIVERGING, OSCILLATING, EpsSchedule, decay_fit,
                               estimate_limit, richardson_extrapolate, tends_to_zero)


def test_schedule():
    s = EpsSchedule()
    assert len(s) == 30 and s.values()[0] == 0.5 and s.values()[1] == 0.25
    assert s.scaled(0.5).eps0 == 0.25
    for bad in ({"eps0": 0.0}, {"ratio": 1.0}, {"steps": 2}):
        with pytest.raises(ValueError):
            EpsSchedule(**bad)


def test_classification_examples():
    est = estimate_limit(lambda e: 1 + e)
    assert est.status == CONVERGED and abs(est.value - 1) < 1e-9
    assert estimate_limit(lambda e: math.sin(math.log(e))).status == OSCILLATING
    assert estimate_limit(lambda e: 1 / e).status == DIVERGING


def test_vector_limit_and_batch():
    seq = lambda e: np.array([1 + e, 2 - 3 * e * e])
    est = estimate_limit(seq)
    assert est.converged and np.allclose(est.value, [1, 2], atol=1e-9)
    batch = estimate_limit(lambda es: np.stack([1 + es, 2 - 3 * es * es], -1), batch=True)
    assert np.allclose(batch.value, est.value, atol=1e-12)


def test_custom_metric():
    sup = lambda a, b: float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    est = estimate_limit(lambda e: np.array([1.0, e]), metric=sup)
    assert est.converged and np.allclose(est.value, [1, 0], atol=1e-9)


def test_richardson_examples():
    assert richardson_extrapolate(1.5, 1.25, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert richardson_extrapolate(3.0, 3.0, 0.5) == 3.0
    assert richardson_extrapolate(1.25, 1.0625, 0.5) == pytest.approx(0.875)
    # second-order sequences are not fixed by one linear step
    assert richardson_extrapolate(1 + 0.25, 1 + 0.0625, 0.5) != pytest.approx(1.0)
    with pytest.raises(ValueError):
        richardson_extrapolate(1, 1, 1)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 0.9))
def test_richardson_exact_on_affine(a, b, q):
    e = 0.5
    assert richardson_extrapolate(a + b * e, a + b * q * e, q) == pytest.approx(a, abs=1e-9)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_polynomial_sequences_converge(a, b, c):
    est = estimate_limit(lambda e: a + b * e + c * e * e)
    assert est.converged and abs(est.value - a) < 1e-6


@given(st.floats(0.2, 2.0))
def test_oscillation_detected(amp):
    assert estimate_limit(lambda e: 3 + amp * math.cos(2 * math.log(e))).status == OSCILLATING


def test_nonfinite_is_diverging():
    assert estimate_limit(lambda e: math.nan if e < 0.1 else 1.0).status == DIVERGING


def test_decay_fit_power():
    eps = 0.5 ** np.arange(12)
    p, c, n = decay_fit(eps, 3 * eps ** 0.5)
    assert p == pytest.approx(0.5) and c == pytest.approx(3) and n == 12


@pytest.mark.parametrize("seq, expected", [
    (lambda e: e, True), (lambda e: 2 * math.sqrt(e), True), (lambda e: 0.0, True),
    (lambda e: 1 + 100 * e, False), (lambda e: 0.3, False), (lambda e: 1e-3 + e, False),
])
def test_tends_to_zero(seq, expected):
    assert tends_to_zero(seq)[0] is expected
