"""Collision environments and the Monte Carlo fraction-in-collision oracle.

A world is an immutable object exposing ``check_many(Q) -> bool array``; ``True``
means the configuration is in collision. Worlds are safe to query from many
threads at once.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from ._parallel import ordered_map, split_evenly, worker_count
from .errors import DimensionError
from .geometry import HPolytope
from .sampling import SamplerConfig, hit_and_run_batch

# ---------------------------------------------------------------------------
# convex shapes


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball (a disk in 2D)."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains_many(self, Q) -> np.ndarray:
        D = np.asarray(Q, dtype=float) - np.asarray(self.center)
        return np.einsum("ij,ij->i", D, D) <= self.radius**2

    def project(self, x) -> np.ndarray:
        c = np.asarray(self.center)
        v = np.asarray(x, dtype=float) - c
        n = float(np.linalg.norm(v))
        return c + v * (self.radius / n) if n > self.radius else np.array(x, dtype=float)

    def support_min(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float(a @ np.asarray(self.center) - self.radius * np.linalg.norm(a))

    def to_dict(self) -> dict:
        return {"type": "disk" if self.dim == 2 else "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in self.hi))
        if len(self.lo) != len(self.hi) or any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box needs lo <= hi of equal length")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains_many(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        return np.all((Q >= np.asarray(self.lo)) & (Q <= np.asarray(self.hi)), axis=1)

    def project(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def support_min(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float(np.sum(np.where(a >= 0, a * np.asarray(self.lo), a * np.asarray(self.hi))))

    def vertices(self) -> np.ndarray:
        if self.dim != 2:
            raise DimensionError("box vertices are only listed in 2D")
        (x0, y0), (x1, y1) = self.lo, self.hi
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    def to_dict(self) -> dict:
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class ConvexPolygon:
    """Closed convex polygon in the plane; vertices are reordered counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]
    _A: np.ndarray = field(init=False, repr=False, compare=False)
    _b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or V.shape[0] < 3:
            raise ValueError("a polygon needs at least three 2D vertices")
        hull = ConvexHull(V)
        if len(hull.vertices) != len(V):
            raise ValueError("polygon vertices are not in convex position")
        V = V[hull.vertices]  # counter-clockwise in 2D
        object.__setattr__(self, "vertices", tuple((float(x), float(y)) for x, y in V))
        E = np.roll(V, -1, axis=0) - V
        normals = np.column_stack([E[:, 1], -E[:, 0]])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        object.__setattr__(self, "_A", normals)
        object.__setattr__(self, "_b", np.einsum("ij,ij->i", normals, V))

    @property
    def dim(self) -> int:
        return 2

    @property
    def V(self) -> np.ndarray:
        return np.asarray(self.vertices)

    def contains_many(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        return np.all(Q @ self._A.T <= self._b + 1e-12, axis=1)

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.contains_many(x[None])[0]:
            return x.copy()
        V = self.V
        W = np.roll(V, -1, axis=0)
        t = np.clip(np.einsum("ij,ij->i", x - V, W - V) / np.einsum("ij,ij->i", W - V, W - V), 0.0, 1.0)
        P = V + t[:, None] * (W - V)
        return P[np.argmin(np.linalg.norm(P - x, axis=1))]

    def support_min(self, a) -> float:
        return float(np.min(self.V @ np.asarray(a, dtype=float)))

    def to_dict(self) -> dict:
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}


def shape_from_dict(d: dict):
    kind = d.get("type")
    if kind in ("disk", "ball", "sphere"):
        return Ball(d["center"], d["radius"])
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "polygon":
        return ConvexPolygon(tuple(tuple(v) for v in d["vertices"]))
    raise ValueError(f"unknown obstacle type {kind!r}")


# ---------------------------------------------------------------------------
# planar segment distances (vectorised over leading axis)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def point_segment_distance(P, A, B) -> np.ndarray:
    """Distance from points ``P`` to segments ``[A, B]`` (broadcasting, last axis = 2)."""
    AB = B - A
    denom = np.einsum("...i,...i->...", AB, AB)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0, np.einsum("...i,...i->...", P - A, AB) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(P - (A + t[..., None] * AB), axis=-1)


def segments_intersect(A, B, C, D) -> np.ndarray:
    """Closed-segment intersection test for ``[A, B]`` and ``[C, D]``."""
    d1 = _cross(D - C, A - C)
    d2 = _cross(D - C, B - C)
    d3 = _cross(B - A, C - A)
    d4 = _cross(B - A, D - A)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)

    def on_seg(P, Q, R, d):
        # R collinear with [P, Q] and inside its bounding box
        lo = np.minimum(P, Q)
        hi = np.maximum(Q, P)
        return (d == 0) & np.all((R >= lo) & (R <= hi), axis=-1)

    touch = on_seg(C, D, A, d1) | on_seg(C, D, B, d2) | on_seg(A, B, C, d3) | on_seg(A, B, D, d4)
    return proper | touch


def segment_segment_distance(A, B, C, D) -> np.ndarray:
    d = np.minimum.reduce([
        point_segment_distance(A, C, D),
        point_segment_distance(B, C, D),
        point_segment_distance(C, A, B),
        point_segment_distance(D, A, B),
    ])
    return np.where(segments_intersect(A, B, C, D), 0.0, d)


def segment_shape_distance(A, B, shape) -> np.ndarray:
    """Distance from segments ``[A, B]`` (shape (N, 2)) to a planar convex obstacle."""
    if isinstance(shape, Ball):
        return np.maximum(point_segment_distance(np.asarray(shape.center), A, B) - shape.radius, 0.0)
    V = shape.vertices() if isinstance(shape, Box) else shape.V
    W = np.roll(V, -1, axis=0)
    inside = shape.contains_many(A)
    d = np.full(A.shape[0], np.inf)
    for v, w in zip(V, W):
        d = np.minimum(d, segment_segment_distance(A, B, v, w))
    return np.where(inside, 0.0, d)


# ---------------------------------------------------------------------------
# worlds


class CollisionWorld(ABC):
    """Configuration-space collision oracle."""

    dim: int

    @property
    @abstractmethod
    def pairs(self) -> list[str]:
        """Names of the collision pairs that are checked."""

    @abstractmethod
    def _check_many(self, Q: np.ndarray) -> np.ndarray: ...

    def check_many(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[1] != self.dim:
            raise DimensionError(f"expected configurations of dimension {self.dim}, got shape {Q.shape}")
        if Q.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        return self._check_many(Q)

    def check(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise DimensionError(f"expected a configuration of dimension {self.dim}, got shape {q.shape}")
        return bool(self._check_many(q[None])[0])

    def __call__(self, q) -> bool:
        return self.check(q)


class PointRobotWorld(CollisionWorld):
    """Convex obstacles living directly in configuration space."""

    def __init__(self, obstacles, dim: int | None = None):
        self.obstacles = tuple(obstacles)
        dims = {o.dim for o in self.obstacles}
        if len(dims) > 1:
            raise DimensionError("obstacles have mixed dimensions")
        if dim is None:
            if not dims:
                raise ValueError("dim is required for a world without obstacles")
            dim = dims.pop()
        elif dims and dims != {dim}:
            raise DimensionError(f"obstacles are {dims.pop()}-d but world is {dim}-d")
        self.dim = int(dim)

    @property
    def pairs(self) -> list[str]:
        return [f"robot-obstacle{i}" for i in range(len(self.obstacles))]

    def _check_many(self, Q):
        hit = np.zeros(Q.shape[0], dtype=bool)
        for o in self.obstacles:
            hit |= o.contains_many(Q)
        return hit

    def to_dict(self) -> dict:
        return {"type": "point_robot", "dim": self.dim, "obstacles": [o.to_dict() for o in self.obstacles]}


class PlanarArmWorld(CollisionWorld):
    """Serial planar arm of capsule links rooted at ``base``.

    Link ``k`` runs from joint ``k`` to joint ``k + 1``; its absolute angle is the
    cumulative sum of the first ``k + 1`` joint angles. A configuration collides
    when some link capsule touches an obstacle, or when a listed self-collision
    pair of links comes within ``2 * link_radius``.
    """

    def __init__(self, link_lengths, link_radius=0.0, obstacles=(), joint_limits=None,
                 self_collision_pairs=(), base=(0.0, 0.0)):
        self.link_lengths = tuple(float(x) for x in link_lengths)
        if not self.link_lengths or any(x <= 0 for x in self.link_lengths):
            raise ValueError("link lengths must be positive")
        self.link_radius = float(link_radius)
        if self.link_radius < 0:
            raise ValueError("link radius must be nonnegative")
        self.obstacles = tuple(obstacles)
        if any(o.dim != 2 for o in self.obstacles):
            raise DimensionError("arm obstacles must be planar")
        self.dim = len(self.link_lengths)
        if joint_limits is None:
            joint_limits = [(-math.pi, math.pi)] * self.dim
        self.joint_limits = tuple((float(lo), float(hi)) for lo, hi in joint_limits)
        if len(self.joint_limits) != self.dim:
            raise DimensionError("one joint limit interval per link is required")
        pairs = []
        for i, j in self_collision_pairs:
            i, j = sorted((int(i), int(j)))
            if not (0 <= i < j < self.dim):
                raise ValueError(f"invalid self-collision pair ({i}, {j})")
            pairs.append((i, j))
        self.self_collision_pairs = tuple(pairs)
        self.base = tuple(float(x) for x in base)

    @property
    def domain(self) -> HPolytope:
        lo, hi = zip(*self.joint_limits)
        return HPolytope.from_box(lo, hi)

    @property
    def pairs(self) -> list[str]:
        names = [f"link{k}-obstacle{j}" for k in range(self.dim) for j in range(len(self.obstacles))]
        return names + [f"link{i}-link{j}" for i, j in self.self_collision_pairs]

    def forward_kinematics(self, Q) -> np.ndarray:
        """Joint positions, shape (N, dim + 1, 2); index 0 is the base."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        theta = np.cumsum(Q, axis=1)
        L = np.asarray(self.link_lengths)
        steps = np.stack([L * np.cos(theta), L * np.sin(theta)], axis=-1)
        pts = np.concatenate([np.zeros((Q.shape[0], 1, 2)), np.cumsum(steps, axis=1)], axis=1)
        return pts + np.asarray(self.base)

    def _check_many(self, Q):
        pts = self.forward_kinematics(Q)
        hit = np.zeros(Q.shape[0], dtype=bool)
        for k in range(self.dim):
            A, B = pts[:, k], pts[:, k + 1]
            for o in self.obstacles:
                hit |= segment_shape_distance(A, B, o) <= self.link_radius
        for i, j in self.self_collision_pairs:
            d = segment_segment_distance(pts[:, i], pts[:, i + 1], pts[:, j], pts[:, j + 1])
            hit |= d <= 2.0 * self.link_radius
        return hit

    def to_dict(self) -> dict:
        return {
            "type": "planar_arm",
            "link_lengths": list(self.link_lengths),
            "link_radius": self.link_radius,
            "obstacles": [o.to_dict() for o in self.obstacles],
            "joint_limits": [list(x) for x in self.joint_limits],
            "self_collision_pairs": [list(p) for p in self.self_collision_pairs],
            "base": list(self.base),
        }


def world_from_dict(d: dict) -> CollisionWorld:
    kind = d.get("type")
    obstacles = [shape_from_dict(o) for o in d.get("obstacles", [])]
    if kind == "point_robot":
        return PointRobotWorld(obstacles, dim=d.get("dim"))
    if kind == "planar_arm":
        return PlanarArmWorld(
            d["link_lengths"],
            d.get("link_radius", 0.0),
            obstacles,
            d.get("joint_limits"),
            d.get("self_collision_pairs", ()),
            d.get("base", (0.0, 0.0)),
        )
    raise ValueError(f"unknown world type {kind!r}")


# ---------------------------------------------------------------------------
# batch operations

_MIN_CHUNK = 256


def check_batch(world: CollisionWorld, qs, workers: int | None = None) -> np.ndarray:
    """Collision flags for every row of ``qs``, in input order."""
    Q = np.asarray(qs, dtype=float)
    if Q.ndim == 1 and Q.size == 0:
        return np.zeros(0, dtype=bool)
    Q = np.atleast_2d(Q)
    if Q.shape[1] != world.dim:
        raise DimensionError(f"expected configurations of dimension {world.dim}, got shape {Q.shape}")
    parts = min(worker_count(workers), max(1, Q.shape[0] // _MIN_CHUNK))
    chunks = [Q[lo:hi] for lo, hi in split_evenly(Q.shape[0], parts)]
    out = ordered_map(world.check_many, chunks, workers)
    return np.concatenate(out) if out else np.zeros(0, dtype=bool)


@dataclass(frozen=True)
class CollisionFraction:
    estimate: float
    half_width: float
    n: int

    @property
    def lower(self) -> float:
        return self.estimate - self.half_width

    @property
    def upper(self) -> float:
        return self.estimate + self.half_width


ORACLE_CHAINS = 1000


def fraction_in_collision(world: CollisionWorld, P: HPolytope, n: int, sampler_cfg: SamplerConfig | None = None,
                          workers: int | None = None) -> CollisionFraction:
    """Monte Carlo estimate of the colliding volume fraction of ``P``.

    The half-width is the 95% normal-approximation interval ``1.96 sqrt(p(1-p)/n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sampler_cfg is None:
        sampler_cfg = SamplerConfig(chains=ORACLE_CHAINS)
    Q = hit_and_run_batch(P, n, sampler_cfg, workers=workers)
    p = float(np.mean(check_batch(world, Q, workers=workers)))
    return CollisionFraction(p, 1.96 * math.sqrt(p * (1.0 - p) / n), n)
