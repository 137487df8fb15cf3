"""Maximum-volume inscribed ellipsoid of an H-polytope.

The ellipsoid ``{B u + d : ||u|| <= 1}`` lies in ``{x : a_i^T x <= b_i}`` iff
``||B a_i|| + a_i^T d <= b_i`` for every face. We maximise ``log det B`` over
symmetric positive definite ``B`` and centers ``d`` with a primal barrier method:
each face contributes the second-order-cone barrier ``-log(s_i^2 - ||B a_i||^2)``
with ``s_i = b_i - a_i^T d``, and Newton's method (with backtracking that keeps
every iterate strictly feasible) follows the central path until the duality gap
``2m / t`` falls below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInteriorError, UnboundedPolytopeError
from .geometry import Ellipsoid, HPolytope

MAX_NEWTON = 200
COND_LIMIT = 1e10
_MU = 10.0


@dataclass(frozen=True)
class MvieResult:
    ellipsoid: Ellipsoid
    log_volume_proxy: float
    iterations: int
    converged: bool


def ellipsoid_volume_proxy(e: Ellipsoid) -> float:
    """``log det E^{-1/2}``: log-volume up to the unit-ball constant."""
    sign, logdet = np.linalg.slogdet(e.E)
    if sign <= 0:
        raise ValueError("ellipsoid matrix is not positive definite")
    return -0.5 * float(logdet)


def _sym_basis(n: int) -> np.ndarray:
    mats = []
    for i in range(n):
        for j in range(i, n):
            S = np.zeros((n, n))
            S[i, j] = S[j, i] = 1.0
            mats.append(S)
    return np.array(mats)


def _normalized_faces(P: HPolytope):
    A = np.asarray(P.A, dtype=float)
    b = np.asarray(P.b, dtype=float)
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(b[zero] < 0):
        raise EmptyInteriorError("polytope contains an infeasible constant row")
    keep = ~zero
    return A[keep] / norms[keep, None], b[keep] / norms[keep]


class _Barrier:
    def __init__(self, A, b):
        self.A, self.b = A, b
        self.m, self.n = A.shape
        self.S = _sym_basis(self.n)
        self.nB = len(self.S)
        # SA[i, :, k] = S_k a_i, the Jacobian of u_i = B a_i w.r.t. the B coordinates
        self.SA = np.einsum("kpq,iq->ipk", self.S, A)

    def unpack(self, x):
        B = np.einsum("k,kpq->pq", x[: self.nB], self.S)
        return B, x[self.nB:]

    def pack(self, B, d):
        iu = np.triu_indices(self.n)
        return np.concatenate([B[iu], d])

    def value(self, x, t):
        B, d = self.unpack(x)
        try:
            L = np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return np.inf
        U = self.A @ B
        s = self.b - self.A @ d
        w = s * s - np.einsum("ij,ij->i", U, U)
        if np.any(s <= 0) or np.any(w <= 0):
            return np.inf
        return -t * 2.0 * np.sum(np.log(np.diag(L))) - np.sum(np.log(w))

    def derivatives(self, x, t):
        B, d = self.unpack(x)
        n, nB, m = self.n, self.nB, self.m
        Binv = np.linalg.inv(B)
        BS = np.einsum("pq,kqr->kpr", Binv, self.S)
        grad = np.zeros(nB + n)
        hess = np.zeros((nB + n, nB + n))
        grad[:nB] = -t * np.einsum("kpp->k", BS)
        hess[:nB, :nB] = t * np.einsum("kpq,lqp->kl", BS, BS)

        U = self.A @ B
        s = self.b - self.A @ d
        w = s * s - np.einsum("ij,ij->i", U, U)
        # per-face gradient of -log w with respect to (u, s)
        gu = 2.0 * U / w[:, None]
        gs = -2.0 * s / w
        grad[:nB] += np.einsum("ipk,ip->k", self.SA, gu)
        grad[nB:] += -(gs[:, None] * self.A).sum(axis=0)

        # Hessian of -log w in (u, s): diag(2I, -2)/w + v v^T, v = (-2u, 2s)/w
        vu = -2.0 * U / w[:, None]
        vs = 2.0 * s / w
        Ju_vu = np.einsum("ipk,ip->ik", self.SA, vu)  # (m, nB)
        Js_vs = -vs[:, None] * self.A  # (m, n)
        hess[:nB, :nB] += np.einsum("ipk,ipl,i->kl", self.SA, self.SA, 2.0 / w) + Ju_vu.T @ Ju_vu
        hess[nB:, nB:] += np.einsum("ip,iq,i->pq", self.A, self.A, -2.0 / w) + Js_vs.T @ Js_vs
        cross = Ju_vu.T @ Js_vs
        hess[:nB, nB:] += cross
        hess[nB:, :nB] += cross.T
        return grad, hess


def inscribed_ellipsoid(P: HPolytope, tol: float = 1e-8, max_iterations: int = MAX_NEWTON) -> MvieResult:
    """Maximum-volume ellipsoid contained in ``P``.

    Parameters
    ----------
    P : HPolytope
        Must be bounded with nonempty interior.
    tol : float
        Target duality gap on ``log det B``.
    max_iterations : int
        Budget of Newton steps over all barrier stages. When it runs out, or when
        ``B`` becomes too ill-conditioned, the best iterate is returned with
        ``converged=False``.
    """
    A, b = _normalized_faces(P)
    HPolytope(A, b).bounding_box()  # raises on unbounded or empty
    center, radius = HPolytope(A, b).chebyshev_center()
    if not radius > 0:
        raise EmptyInteriorError("polytope has an empty interior")

    bar = _Barrier(A, b)
    x = bar.pack(0.5 * radius * np.eye(bar.n), center)
    t = 1.0
    gap_factor = 2.0 * bar.m
    iterations = 0
    converged = False
    while True:
        # centering
        while iterations < max_iterations:
            grad, hess = bar.derivatives(x, t)
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement = -float(grad @ step)
            iterations += 1
            if decrement < 1e-10:
                break
            f0 = bar.value(x, t)
            alpha = 1.0
            while True:
                f1 = bar.value(x + alpha * step, t)
                if f1 <= f0 - 0.25 * alpha * decrement:
                    break
                # in the quadratic region round-off in f dominates the Armijo test
                if alpha == 1.0 and decrement < 1e-6 and np.isfinite(f1):
                    break
                alpha *= 0.5
                if alpha < 1e-14:
                    break
            if alpha < 1e-14:
                break
            x = x + alpha * step
        B, _ = bar.unpack(x)
        if iterations >= max_iterations or np.linalg.cond(B) > COND_LIMIT:
            break
        if gap_factor / t < tol:
            converged = True
            break
        t *= _MU

    B, d = bar.unpack(x)
    B = 0.5 * (B + B.T)
    sign, logdet = np.linalg.slogdet(B)
    if sign <= 0:
        raise UnboundedPolytopeError("barrier iterate lost positive definiteness")
    return MvieResult(Ellipsoid.from_shape(B, d), float(logdet), iterations, converged)
