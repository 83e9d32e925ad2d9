import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dilatation.core import DEGENERATE, PASS, InvalidInputError, audit_axioms
from dilatation.structures import (ContractingStructure, EuclideanStructure, HeisenbergFlatStructure,
                                   HeisenbergStructure, RotatingStructure, graded_dilation, group_inv,
                                   group_op, koranyi_gauge, make_structure)

coord = st.floats(-3, 3, allow_nan=False)
point3 = st.tuples(coord, coord, coord).map(np.array)
point2 = st.tuples(coord, coord).map(np.array)
scale = st.floats(0.01, 1.9)


def test_registry():
    assert isinstance(make_structure("euclidean:2"), EuclideanStructure)
    assert make_structure("euclidean:3:1").dim == 3
    assert isinstance(make_structure("rotating:0.5"), RotatingStructure)
    assert isinstance(make_structure("heisenberg"), HeisenbergStructure)
    assert isinstance(make_structure("heisenberg-flat"), HeisenbergFlatStructure)
    assert isinstance(make_structure("contracting:2"), ContractingStructure)
    for bad in ("nope", "euclidean:x", "rotating:"):
        with pytest.raises(ValueError):
            make_structure(bad)


def test_dilate_examples():
    E = make_structure("euclidean:2")
    assert np.allclose(E.dilate([0, 0], 0.5, [2, 0]), [1, 0])
    H = make_structure("heisenberg")
    assert np.allclose(H.dilate([0, 0, 0], 0.5, [1, 1, 1]), [0.5, 0.5, 0.25])


def test_bad_inputs():
    E = make_structure("euclidean:2")
    with pytest.raises(ValueError):
        E.dilate([0, 0], 0.0, [1, 1])
    with pytest.raises(ValueError):
        E.dilate([0, 0], -1.0, [1, 1])
    with pytest.raises(InvalidInputError):
        E.dilate([0, math.nan], 0.5, [1, 1])
    with pytest.raises(InvalidInputError):
        E.dilate([0, 0, 0], 0.5, [1, 1])


@given(point2, scale, point2)
def test_rotating_zero_is_euclidean(x, e, y):
    assert np.allclose(make_structure("rotating:0.0").dilate(x, e, y),
                       make_structure("euclidean:2").dilate(x, e, y), atol=1e-12)


def test_group_examples():
    assert np.allclose(group_op([1, 0, 0], [0, 1, 0]), [1, 1, 0.5])
    assert np.allclose(group_op([1, 0, 0], [-1, 0, 0]), [0, 0, 0])
    assert np.allclose(group_inv([1, 2, 3]), [-1, -2, -3])
    assert np.allclose(group_inv([0, 0, 0]), [0, 0, 0])


@given(point3, point3, point3)
def test_group_laws(g, h, k):
    assert np.allclose(group_op(group_op(g, h), k), group_op(g, group_op(h, k)), atol=1e-9)
    assert np.allclose(group_op(g, np.zeros(3)), g)
    assert np.allclose(group_op(g, group_inv(g)), 0, atol=1e-12)


@given(scale, point3, point3)
def test_graded_dilation_is_automorphism(e, g, h):
    lhs = graded_dilation(e, group_op(g, h))
    rhs = group_op(graded_dilation(e, g), graded_dilation(e, h))
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(scale, point3)
def test_gauge_homogeneous(e, g):
    assert math.isclose(koranyi_gauge(graded_dilation(e, g)), e * koranyi_gauge(g),
                        rel_tol=1e-12, abs_tol=1e-14)


@given(point3, point3, point3)
def test_heisenberg_distance_left_invariant(w, x, y):
    H = make_structure("heisenberg")
    assert math.isclose(H.distance(group_op(w, x), group_op(w, y)), H.distance(x, y),
                        rel_tol=1e-7, abs_tol=1e-7)


@given(point3, point3, point3)
def test_heisenberg_triangle_inequality(x, y, z):
    H = make_structure("heisenberg")
    assert H.distance(x, z) <= H.distance(x, y) + H.distance(y, z) + 1e-9


@given(point3, scale, scale, point3)
def test_dilatation_group_law(x, a, b, y):
    for S in (make_structure("heisenberg"), make_structure("heisenberg-flat")):
        lhs = S.dilate(x, a, S.dilate(x, b, y))
        assert np.allclose(lhs, S.dilate(x, a * b, y), atol=1e-9)


@pytest.mark.parametrize("name", ["euclidean:2", "rotating:0.5", "heisenberg", "heisenberg-flat",
                                  "contracting:2"])
def test_dilate_many_matches_dilate(name, rng):
    S = make_structure(name)
    eps = np.array([1.5, 0.5, 0.1, 1e-3])
    x, y = rng.normal(size=(2, S.dim))
    batch = S.dilate_many(x, eps, y)
    for k, e in enumerate(eps):
        assert np.allclose(batch[k], S.dilate(x, e, y), atol=1e-13)


@pytest.mark.parametrize("name", ["euclidean:2", "euclidean:3", "rotating:0.0", "rotating:0.5",
                                  "heisenberg"])
def test_audit_passes(name):
    rep = audit_axioms(make_structure(name), 10, seed=1)
    assert rep.passed, rep.summary()


def test_contracting_flagged_degenerate():
    rep = audit_axioms(make_structure("contracting:2"), 10)
    assert not rep.passed
    assert DEGENERATE in {c.status for c in rep.checks}
    assert all(c.witness is not None for c in rep.checks if c.status != PASS)
