"""Probabilistically collision-free convex regions grown from sampled collision checks."""

__version__ = "0.1.0"

from .collision import (  # noqa: E402
    Ball,
    Box,
    CollisionWorld,
    ConvexPolygon,
    PlanarArmWorld,
    PointRobotWorld,
    check_batch,
    fraction_in_collision,
)
from .geometry import Ellipsoid, HPolytope, Hyperplane, tangent_hyperplane  # noqa: E402
from .iris import IrisOptions, RegionReport, convex_iris_grow, iris_grow  # noqa: E402
from .mvie import inscribed_ellipsoid  # noqa: E402
from .sampling import SamplerConfig, hit_and_run_batch  # noqa: E402
from .stattest import TestSpec, sample_count, unadaptive_test  # noqa: E402

__all__ = [
    "Ball", "Box", "CollisionWorld", "ConvexPolygon", "PlanarArmWorld", "PointRobotWorld",
    "check_batch", "fraction_in_collision", "Ellipsoid", "HPolytope", "Hyperplane",
    "tangent_hyperplane", "IrisOptions", "RegionReport", "convex_iris_grow", "iris_grow",
    "inscribed_ellipsoid", "SamplerConfig", "hit_and_run_batch", "TestSpec", "sample_count",
    "unadaptive_test",
]
