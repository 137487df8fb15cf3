"""Convex geometry primitives: H-polytopes, ellipsoids and hyperplanes.

All values are immutable once constructed; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DegenerateError,
    DimensionError,
    EmptyInteriorError,
    UnboundedPolytopeError,
)

TOL_MEM = 1e-9
TOL_SYM = 1e-9
TOL_NORM = 1e-9


def _frozen(x, ndim: int) -> np.ndarray:
    arr = np.array(x, dtype=float, ndmin=ndim)
    arr.flags.writeable = False
    return arr


def _as_point(q, dim: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (dim,):
        raise DimensionError(f"expected a point of dimension {dim}, got shape {q.shape}")
    return q


class HPolytope:
    """The set ``{q : A q <= b}``.

    Parameters
    ----------
    A : array_like, shape (m, d)
        One row per face.
    b : array_like, shape (m,)
        Face offsets.
    """

    __slots__ = ("_A", "_b")

    def __init__(self, A, b):
        A = _frozen(A, 2)
        b = _frozen(b, 1)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise DimensionError(f"A has shape {A.shape} but b has shape {b.shape}")
        self._A = A
        self._b = b

    @classmethod
    def from_box(cls, lo, hi) -> HPolytope:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be vectors of equal length")
        if np.any(hi <= lo):
            raise EmptyInteriorError("box has an empty interior (hi <= lo)")
        d = lo.size
        eye = np.eye(d)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self._b

    @property
    def dim(self) -> int:
        return self._A.shape[1]

    @property
    def num_faces(self) -> int:
        return self._A.shape[0]

    def contains(self, q, tol: float = TOL_MEM) -> bool:
        q = _as_point(q, self.dim)
        return bool(np.all(self._A @ q <= self._b + tol))

    def contains_many(self, Q, tol: float = TOL_MEM) -> np.ndarray:
        """Vectorised membership for the rows of ``Q``."""
        Q = np.asarray(Q, dtype=float).reshape(-1, self.dim)
        return np.all(Q @ self._A.T <= self._b + tol, axis=1)

    def slack(self, q) -> np.ndarray:
        q = _as_point(q, self.dim)
        return self._b - self._A @ q

    def is_interior(self, q, margin: float = 0.0) -> bool:
        return bool(np.all(self.slack(q) > margin))

    def add_face(self, h: Hyperplane) -> HPolytope:
        if h.a.shape != (self.dim,):
            raise DimensionError(f"hyperplane of dimension {h.a.size} added to {self.dim}-d polytope")
        return HPolytope(np.vstack([self._A, h.a]), np.append(self._b, h.b))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box via one LP per coordinate direction.

        Raises
        ------
        UnboundedPolytopeError
            If some coordinate is unbounded.
        EmptyInteriorError
            If the polytope is empty.
        """
        d = self.dim
        lo = np.empty(d)
        hi = np.empty(d)
        for j in range(d):
            for sign, out in ((-1.0, hi), (1.0, lo)):
                cost = np.zeros(d)
                cost[j] = sign
                res = linprog(cost, A_ub=self._A, b_ub=self._b, bounds=[(None, None)] * d, method="highs")
                if res.status == 3:
                    raise UnboundedPolytopeError(f"polytope is unbounded along coordinate {j}")
                if res.status == 2:
                    raise EmptyInteriorError("polytope is empty")
                if res.status != 0:
                    raise UnboundedPolytopeError(f"support LP failed: {res.message}")
                out[j] = res.x[j]
        return lo, hi

    def is_bounded(self) -> bool:
        try:
            self.bounding_box()
        except UnboundedPolytopeError:
            return False
        return True

    def chebyshev_center(self) -> tuple[np.ndarray, float]:
        """Center and radius of the largest inscribed Euclidean ball."""
        d = self.dim
        norms = np.linalg.norm(self._A, axis=1)
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        A_ub = np.hstack([self._A, norms[:, None]])
        bounds = [(None, None)] * d + [(0.0, None)]
        res = linprog(cost, A_ub=A_ub, b_ub=self._b, bounds=bounds, method="highs")
        if res.status == 3:
            raise UnboundedPolytopeError("polytope contains arbitrarily large balls")
        if res.status != 0:
            raise EmptyInteriorError(f"Chebyshev center LP failed: {res.message}")
        return res.x[:d].copy(), float(res.x[-1])

    def __eq__(self, other):
        if not isinstance(other, HPolytope):
            return NotImplemented
        return np.array_equal(self._A, other._A) and np.array_equal(self._b, other._b)

    def __hash__(self):
        return hash((self._A.tobytes(), self._b.tobytes()))

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, faces={self.num_faces})"


class Ellipsoid:
    """The set ``{x : (x - c)^T E (x - c) <= 1}`` with ``E`` symmetric positive definite."""

    __slots__ = ("_E", "_c")

    def __init__(self, E, c):
        E = np.array(E, dtype=float, ndmin=2)
        c = np.array(c, dtype=float, ndmin=1)
        if E.ndim != 2 or E.shape != (c.size, c.size) or c.ndim != 1:
            raise DimensionError(f"E has shape {E.shape} but c has shape {c.shape}")
        scale = max(1.0, float(np.max(np.abs(E))))
        if np.max(np.abs(E - E.T)) > TOL_SYM * scale:
            raise ValueError("ellipsoid matrix is not symmetric")
        E = 0.5 * (E + E.T)
        try:
            np.linalg.cholesky(E)
        except np.linalg.LinAlgError:
            raise ValueError("ellipsoid matrix is not positive definite") from None
        E.flags.writeable = False
        c.flags.writeable = False
        self._E = E
        self._c = c

    @classmethod
    def ball(cls, center, radius: float) -> Ellipsoid:
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        center = np.asarray(center, dtype=float)
        return cls(np.eye(center.size) / radius**2, center)

    @classmethod
    def from_shape(cls, B, c) -> Ellipsoid:
        """Ellipsoid ``{B u + c : ||u|| <= 1}`` for symmetric positive definite ``B``."""
        Binv = np.linalg.inv(np.asarray(B, dtype=float))
        E = Binv.T @ Binv
        return cls(0.5 * (E + E.T), c)

    @property
    def E(self) -> np.ndarray:
        return self._E

    @property
    def c(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.size

    def contains(self, x, tol: float = 0.0) -> bool:
        return ellipsoid_metric_sq(self, x) <= 1.0 + tol

    def support(self, a) -> float:
        """``max a^T x`` over the ellipsoid."""
        a = _as_point(a, self.dim)
        return float(a @ self._c + np.sqrt(a @ np.linalg.solve(self._E, a)))

    def __eq__(self, other):
        if not isinstance(other, Ellipsoid):
            return NotImplemented
        return np.array_equal(self._E, other._E) and np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash((self._E.tobytes(), self._c.tobytes()))

    def __repr__(self):
        return f"Ellipsoid(c={self._c.tolist()})"


@dataclass(frozen=True)
class Hyperplane:
    """Halfspace ``{q : a^T q <= b}`` with unit normal ``a``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _frozen(self.a, 1)
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > TOL_NORM:
            raise ValueError(f"hyperplane normal must be unit length, got norm {norm}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def violation(self, q) -> float:
        return float(self.a @ np.asarray(q, dtype=float) - self.b)

    def __eq__(self, other):
        if not isinstance(other, Hyperplane):
            return NotImplemented
        return np.array_equal(self.a, other.a) and self.b == other.b

    def __hash__(self):
        return hash((self.a.tobytes(), self.b))


def contains(P: HPolytope, q) -> bool:
    """Membership with the library-wide tolerance; boundary points count as inside."""
    return P.contains(q)


def ellipsoid_metric_sq(e: Ellipsoid, q) -> float:
    """Squared ellipsoidal distance ``(q - c)^T E (q - c)``."""
    u = _as_point(q, e.dim) - e.c
    return max(float(u @ e.E @ u), 0.0)


def ellipsoid_metric_sq_many(e: Ellipsoid, Q) -> np.ndarray:
    U = np.asarray(Q, dtype=float).reshape(-1, e.dim) - e.c
    return np.maximum(np.einsum("ij,jk,ik->i", U, e.E, U), 0.0)


def tangent_hyperplane(e: Ellipsoid, q_star, stepback: float = 0.0) -> Hyperplane:
    """Plane through ``q_star`` tangent to the scaled copy of ``e``, shifted toward ``c`` by ``stepback``.

    The normal is ``E (q* - c)`` normalised and the offset is ``a^T q* - stepback``.
    For ``q_star`` outside ``e`` and zero stepback the plane does not cut ``e``.
    """
    if stepback < 0:
        raise ValueError("stepback must be nonnegative")
    q_star = _as_point(q_star, e.dim)
    g = e.E @ (q_star - e.c)
    norm = float(np.linalg.norm(g))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateError("tangent plane is undefined at the ellipsoid center")
    a = g / norm
    return Hyperplane(a, float(a @ q_star) - stepback)


def add_face(P: HPolytope, h: Hyperplane) -> HPolytope:
    return P.add_face(h)
