import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilatation.core import PASS
from dilatation.structures import group_inv, group_op, make_structure
from dilatation.tangent import (TangentGroup, approx_sum, check_cone_property,
                                check_left_invariance, check_metric_tangent, delta_op,
                                one_param_membership, rescaled_distance, tangent_delta,
                                tangent_distance, tangent_inv, tangent_sum)

E = make_structure("euclidean:2")
H = make_structure("heisenberg")
small = st.floats(-0.5, 0.5)
p2 = st.tuples(small, small).map(np.array)
p3 = st.tuples(small, small, small).map(np.array)


def test_rescaled_distance():
    u, v = np.array([1.0, 0]), np.array([0, 1.0])
    for e in (1.0, 0.3, 1e-3):
        assert rescaled_distance(E, [0.2, 0.1], e, u, v) == pytest.approx(math.sqrt(2), abs=1e-12)
    a, b = rescaled_distance(H, [0, 0, 0], 0.5, [1, 0, 1], [0, 1, 0]), \
        rescaled_distance(H, [0, 0, 0], 0.01, [1, 0, 1], [0, 1, 0])
    assert abs(a - b) < 1e-12
    assert rescaled_distance(H, [0, 0, 0], 0.5, [1, 2, 3], [1, 2, 3]) == 0


def test_tangent_distance_examples():
    assert tangent_distance(E, [0, 0], [1, 0], [0, 1]).value == pytest.approx(math.sqrt(2))
    assert tangent_distance(H, [0, 0, 0], [1, 0, 0], [0, 0, 0]).value == pytest.approx(1.0)
    est = tangent_distance(make_structure("contracting:2"), [0, 0], [1, 0], [0, 1])
    assert est.converged and abs(est.value) < 1e-6


def test_delta_op_examples():
    assert np.allclose(delta_op(E, [0, 0], 0.1, [1, 0], [0, 1]), [-0.9, 1.0], atol=1e-12)
    # x . D_eps(u) . (u^-1 v) at eps = 0.25
    assert np.allclose(delta_op(H, [0, 0, 0], 0.25, [1, 0, 0], [0, 1, 0]), [-0.75, 1, -0.375])
    assert np.allclose(delta_op(H, [0.1, 0.2, 0.3], 1.0, [1, 2, 3], [1, 2, 3]), [1, 2, 3])
    with pytest.raises(ValueError):
        delta_op(E, [0, 0], 2.0, [1, 0], [0, 1])


@given(p2, p2, p2, st.floats(1e-3, 1))
def test_euclidean_delta_closed_form(x, u, v, e):
    assert np.allclose(delta_op(E, x, e, u, v), x + e * (u - x) + v - u, atol=1e-12)


def test_limit_examples():
    assert np.allclose(tangent_delta(E, [0, 0], [1, 0], [0, 1]).value, [-1, 1], atol=1e-9)
    assert np.allclose(tangent_delta(H, [0, 0, 0], [1, 0, 0], [0, 1, 0]).value, [-1, 1, -0.5], atol=1e-6)
    assert np.allclose(tangent_inv(E, [0, 0], [1, 2]).value, [-1, -2], atol=1e-9)
    assert np.allclose(tangent_inv(H, [0, 0, 0], [1, 0, 0]).value, [-1, 0, 0], atol=1e-6)
    assert np.allclose(tangent_inv(E, [0.3, 0.1], [0.3, 0.1]).value, [0.3, 0.1])
    assert np.allclose(tangent_sum(E, [0, 0], [0, 0], [0.4, 0.2]).value, [0.4, 0.2])


@given(p3, p3, p3)
@settings(max_examples=15)
def test_heisenberg_delta_closed_form(x, u, v):
    est = tangent_delta(H, x, u, v)
    assert est.converged
    assert np.allclose(est.value, group_op(group_op(x, group_inv(u)), v), atol=1e-6)


@given(p3, p3, p3)
@settings(max_examples=15)
def test_heisenberg_sum_closed_form(x, u, v):
    est = tangent_sum(H, x, u, v)
    assert est.converged
    assert np.allclose(est.value, group_op(group_op(u, group_inv(x)), v), atol=1e-6)


@given(p2, p2, p2, st.floats(1e-2, 1))
def test_euclidean_approx_sum_closed_form(x, u, v, e):
    assert np.allclose(approx_sum(E, x, e, u, v), u + v - x - e * (u - x), atol=1e-12)


@pytest.mark.parametrize("S, x", [(E, [0.1, 0.2]), (H, [0.0, 0.0, 0.0]), (H, [0.2, -0.1, 0.3])])
def test_cone_and_invariance(S, x):
    u = np.asarray(x) + 0.3
    v = np.asarray(x) - 0.2
    assert check_cone_property(S, x, u, v, tol=1e-12).passed
    assert check_left_invariance(S, x, samples=4, tol=1e-10 if S is E else 1e-6).passed


def test_cone_identity_mu():
    rep = check_cone_property(H, [0, 0, 0], [1, 0, 0], [0, 1, 1], mus=(1.0,), tol=1e-12)
    assert rep.passed and rep["mu=1"].residual == 0


def test_metric_tangent():
    assert check_metric_tangent(E, [0.3, 0.1], tol=1e-12).passed
    rep = check_metric_tangent(H, [0, 0, 0], tol=1e-12)
    assert rep.passed and rep.checks[0].residual < 1e-12
    bad = check_metric_tangent(make_structure("contracting:2"), [0, 0])
    assert not bad.passed and bad.checks[0].witness is not None


def test_tangent_group_ops():
    T = TangentGroup(H, [0, 0, 0])
    g = np.array([0.2, 0.1, -0.3])
    assert np.allclose(T.op(T.neutral, g), g, atol=1e-9)
    assert np.allclose(T.op(g, T.inv(g)), 0, atol=1e-6)
    assert T.all_converged
    strict = TangentGroup(make_structure("rotating:0.5"), [0, 0], strict=True)
    assert np.allclose(strict.op([0.1, 0.2], [0.3, 0.0]), [0.4, 0.2], atol=1e-9)


def test_one_parameter_membership():
    T = TangentGroup(H, [0, 0, 0])
    assert one_param_membership(T, [1, 2, 0]).checks[0].status == PASS
    assert one_param_membership(T, [0, 0, 1]).checks[0].status != PASS
    TE = TangentGroup(E, [0, 0])
    assert one_param_membership(TE, [0.7, -0.4]).passed
