import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cfree.collision import (
    Ball,
    Box,
    ConvexPolygon,
    PlanarArmWorld,
    PointRobotWorld,
    check_batch,
    fraction_in_collision,
    point_segment_distance,
    segment_segment_distance,
    segment_shape_distance,
    shape_from_dict,
    world_from_dict,
)
from cfree.errors import DimensionError
from cfree.geometry import HPolytope
from cfree.sampling import SamplerConfig

pts = arrays(np.float64, (2,), elements=st.floats(-2, 2))


def _dense(A, B, n=4001):
    t = np.linspace(0, 1, n)[:, None]
    return A + t * (B - A)


def test_point_robot_examples():
    w = PointRobotWorld([Ball([3, 0], 1)])
    assert w.check([3, 0]) and not w.check([0, 0])
    assert w.check([2, 0])  # closed set
    empty = PointRobotWorld([], dim=2)
    assert not empty.check_many(np.random.default_rng(0).normal(size=(50, 2))).any()
    with pytest.raises(ValueError):
        PointRobotWorld([])
    with pytest.raises(DimensionError):
        w.check([0, 0, 0])


def test_arm_fully_extended_touches_disk():
    arm = PlanarArmWorld([1, 1], 0.0, [Ball([2, 0], 0.1)])
    assert arm.check([0, 0])
    assert not arm.check([math.pi / 2, 0])
    fk = arm.forward_kinematics([[0.0, math.pi / 2]])
    assert np.allclose(fk[0], [[0, 0], [1, 0], [1, 1]])


def test_arm_radius_and_self_collision():
    arm = PlanarArmWorld([1, 1], 0.05, [Ball([0, 1.0], 0.1)])
    # link 0 along +x passes 1.0 below the disk center
    assert not arm.check([0, 0])
    assert arm.check([math.pi / 2, 0])
    folded = PlanarArmWorld([1, 1, 1], 0.05, self_collision_pairs=[(0, 2)])
    assert folded.check([0, 2.6, 2.6])  # third link folds back across the first
    assert not folded.check([0, 0, 0])
    assert folded.pairs == ["link0-link2"]


def test_polygon_and_box_obstacles_for_arm():
    box = Box([1.5, -0.1], [1.7, 0.1])
    tri = ConvexPolygon(((1.5, -0.1), (1.7, 0.0), (1.5, 0.1)))
    for o in (box, tri):
        arm = PlanarArmWorld([1, 1], 0.0, [o])
        assert arm.check([0, 0]) and not arm.check([math.pi, 0])


def test_polygon_reorders_and_validates():
    p = ConvexPolygon(((0, 0), (0, 1), (1, 0)))
    assert p.contains_many([[0.2, 0.2]])[0]
    with pytest.raises(ValueError):
        ConvexPolygon(((0, 0), (1, 0), (1, 1), (0.9, 0.1)))


@given(pts, pts, pts)
@settings(max_examples=200, deadline=None)
def test_point_segment_distance_matches_dense(p, a, b):
    d = point_segment_distance(p, a, b)
    dense = np.linalg.norm(_dense(a, b) - p, axis=1).min()
    assert d <= dense + 1e-12
    assert d >= dense - np.linalg.norm(b - a) / 4000 - 1e-12


@given(pts, pts, pts, pts)
@settings(max_examples=200, deadline=None)
def test_segment_segment_distance_matches_dense(a, b, c, d):
    dist = float(segment_segment_distance(a[None], b[None], c[None], d[None])[0])
    S, T = _dense(a, b, 401), _dense(c, d, 401)
    dense = np.min(np.linalg.norm(S[:, None] - T[None], axis=2))
    step = (np.linalg.norm(b - a) + np.linalg.norm(d - c)) / 400
    assert dist <= dense + 1e-12
    assert dist >= dense - step - 1e-12


@given(pts, pts)
@settings(max_examples=60, deadline=None)
def test_segment_shape_distance_against_projection(a, b):
    shapes = [Ball([0.3, -0.2], 0.5), Box([-0.5, 0.2], [0.4, 0.9]),
              ConvexPolygon(((-1.0, -1.0), (0.0, -1.5), (0.5, -0.8)))]
    S = _dense(a, b, 401)
    step = np.linalg.norm(b - a) / 400
    for shp in shapes:
        d = float(segment_shape_distance(a[None], b[None], shp)[0])
        dense = min(np.linalg.norm(q - shp.project(q)) for q in S)
        assert d <= dense + 1e-9
        assert d >= dense - step - 1e-9


def test_shape_and_world_dict_roundtrip():
    arm = PlanarArmWorld([1, 0.5], 0.02, [Ball([1, 1], 0.2), Box([0, -1], [0.3, -0.6])],
                         self_collision_pairs=[(0, 1)])
    again = world_from_dict(arm.to_dict())
    Q = np.random.default_rng(1).uniform(-3, 3, size=(500, 2))
    assert np.array_equal(arm.check_many(Q), again.check_many(Q))
    assert shape_from_dict(Ball([1, 2], 3).to_dict()) == Ball([1, 2], 3)
    with pytest.raises(ValueError):
        world_from_dict({"type": "nope"})


def test_check_batch_order_and_workers():
    w = PointRobotWorld([Ball([0, 0], 0.5)])
    Q = np.random.default_rng(2).uniform(-1, 1, size=(3000, 2))
    ref = np.linalg.norm(Q, axis=1) <= 0.5
    assert np.array_equal(check_batch(w, Q, workers=1), ref)
    assert np.array_equal(check_batch(w, Q, workers=4), ref)
    assert check_batch(w, np.empty((0, 2))).shape == (0,)


def test_fraction_examples():
    unit = HPolytope.from_box([0, 0], [1, 1])
    free = fraction_in_collision(PointRobotWorld([], dim=2), unit, 1000)
    assert free.estimate == 0.0 and free.half_width == 0.0
    half = fraction_in_collision(PointRobotWorld([Box([0, 0], [0.5, 1])]), unit, 100_000)
    assert abs(half.estimate - 0.5) <= 0.01
    inside = fraction_in_collision(PointRobotWorld([Box([-1, -1], [2, 2])]), unit, 500, SamplerConfig(chains=5))
    assert inside.estimate == 1.0
