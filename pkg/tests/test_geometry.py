import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cfree.errors import DegenerateError, DimensionError, EmptyInteriorError, UnboundedPolytopeError
from cfree.geometry import (
    Ellipsoid,
    HPolytope,
    Hyperplane,
    add_face,
    contains,
    ellipsoid_metric_sq,
    tangent_hyperplane,
)

BOX = HPolytope.from_box([-1, -1], [1, 1])


def test_membership_examples():
    assert contains(BOX, [0, 0])
    assert not contains(BOX, [2, 0])
    P = add_face(BOX, Hyperplane(np.array([1.0, 0.0]), 0.5))
    assert contains(P, [0.5, 0.0])
    assert not contains(P, [0.5 + 1e-6, 0.0])


def test_polytope_validation():
    with pytest.raises(DimensionError):
        HPolytope(np.ones((2, 2)), np.ones(3))
    with pytest.raises(DimensionError):
        BOX.contains([0, 0, 0])
    with pytest.raises(EmptyInteriorError):
        HPolytope.from_box([1, 0], [0, 1])
    assert not BOX.A.flags.writeable


def test_bounding_box_and_errors():
    lo, hi = add_face(BOX, Hyperplane(np.array([1.0, 0.0]), 0.0)).bounding_box()
    assert np.allclose(lo, [-1, -1]) and np.allclose(hi, [0, 1])
    half = HPolytope(np.array([[1.0, 0.0]]), np.array([1.0]))
    with pytest.raises(UnboundedPolytopeError):
        half.bounding_box()
    assert not half.is_bounded()
    empty = HPolytope(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    with pytest.raises(EmptyInteriorError):
        empty.bounding_box()


def test_chebyshev_center():
    c, r = HPolytope.from_box([0, 0], [4, 2]).chebyshev_center()
    assert r == pytest.approx(1.0)
    assert c[1] == pytest.approx(1.0)


def test_metric_examples():
    I = Ellipsoid(np.eye(2), [0, 0])
    assert ellipsoid_metric_sq(I, [3, 4]) == pytest.approx(25.0)
    assert ellipsoid_metric_sq(Ellipsoid(np.diag([4.0, 1.0]), [0, 0]), [1, 0]) == pytest.approx(4.0)
    assert ellipsoid_metric_sq(Ellipsoid(np.eye(2), [0.3, -0.2]), [0.3, -0.2]) == 0.0


def test_ellipsoid_validation():
    with pytest.raises(ValueError):
        Ellipsoid([[1.0, 0.5], [0.0, 1.0]], [0, 0])
    with pytest.raises(ValueError):
        Ellipsoid([[1.0, 0.0], [0.0, -1.0]], [0, 0])
    with pytest.raises(DimensionError):
        Ellipsoid(np.eye(2), [0, 0, 0])
    e = Ellipsoid.from_shape(np.diag([2.0, 1.0]), [1.0, 0.0])
    assert np.allclose(e.E, np.diag([0.25, 1.0]))
    assert e.support([1.0, 0.0]) == pytest.approx(3.0)


def test_tangent_examples():
    h = tangent_hyperplane(Ellipsoid(np.eye(2), [0, 0]), [2, 0], 0.1)
    assert np.allclose(h.a, [1, 0]) and h.b == pytest.approx(1.9)
    h = tangent_hyperplane(Ellipsoid(np.diag([4.0, 1.0]), [0, 0]), [1, 0], 0.0)
    assert np.allclose(h.a, [1, 0]) and h.b == pytest.approx(1.0)
    with pytest.raises(DegenerateError):
        tangent_hyperplane(Ellipsoid(np.eye(2), [0, 0]), [0, 0])
    with pytest.raises(ValueError):
        tangent_hyperplane(Ellipsoid(np.eye(2), [0, 0]), [1, 0], -0.1)


def test_hyperplane_requires_unit_normal():
    with pytest.raises(ValueError):
        Hyperplane(np.array([2.0, 0.0]), 1.0)


def test_add_face_axis_cut_and_idempotence():
    h = Hyperplane(np.array([1.0, 0.0]), 0.0)
    P = add_face(BOX, h)
    g = np.linspace(-1.2, 1.2, 49)
    G = np.array([(x, y) for x in g for y in g])
    expected = (G[:, 0] <= 1e-9) & (np.abs(G[:, 0]) <= 1 + 1e-9) & (np.abs(G[:, 1]) <= 1 + 1e-9)
    assert np.array_equal(P.contains_many(G), expected)
    assert np.array_equal(add_face(P, h).contains_many(G), expected)
    assert BOX.num_faces == 4  # original untouched


def test_redundant_face_leaves_membership():
    rng = np.random.default_rng(0)
    Q = rng.uniform(-3, 3, size=(10_000, 2))
    P = add_face(BOX, Hyperplane(np.array([math.sqrt(0.5), math.sqrt(0.5)]), 2.0))
    assert np.array_equal(P.contains_many(Q), BOX.contains_many(Q))


def _spd(M):
    return M @ M.T + 0.1 * np.eye(M.shape[0])


mats = arrays(np.float64, (3, 3), elements=st.floats(-2, 2))
vecs = arrays(np.float64, (3,), elements=st.floats(-3, 3))


@given(mats, vecs, vecs, st.one_of(st.just(0.0), st.floats(1e-6, 1)))
@settings(max_examples=150, deadline=None)
def test_tangent_plane_properties(M, c, q, stepback):
    e = Ellipsoid(_spd(M), c)
    assume(ellipsoid_metric_sq(e, q) > 1.0 + 1e-6)
    h = tangent_hyperplane(e, q, 0.0)
    assert np.linalg.norm(h.a) == pytest.approx(1.0)
    # the plane does not cut the ellipsoid interior
    assert e.support(h.a) <= h.b + 1e-7 * max(1.0, abs(h.b))
    assert h.a @ c < h.b
    if stepback > 0:
        hs = tangent_hyperplane(e, q, stepback)
        assert hs.violation(q) > 0


@given(mats, vecs)
@settings(max_examples=100, deadline=None)
def test_metric_nonnegative_and_zero_at_center(M, c):
    e = Ellipsoid(_spd(M), c)
    assert ellipsoid_metric_sq(e, c) == 0.0
    assert ellipsoid_metric_sq(e, c + 1.0) > 0.0
