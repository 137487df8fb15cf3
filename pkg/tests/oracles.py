"""Independent reference computations used by several test modules."""

from __future__ import annotations

import numpy as np


def ellipse_grid_search(A, b, center_box, iters=6, n=21):
    """Brute-force maximum-area inscribed ellipse of a 2D polytope.

    Searches over center, rotation and axis ratio; for each tuple the largest
    feasible scale is available in closed form. The grid is refined around the
    incumbent. Returns (log-volume proxy, center).
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    lo = np.array([center_box[0][0], center_box[0][1], 0.0, -3.0])
    hi = np.array([center_box[1][0], center_box[1][1], np.pi, 3.0])
    best = (-np.inf, None)
    for _ in range(iters):
        axes = [np.linspace(lo[j], hi[j], n) for j in range(4)]
        cx, cy, th, lr = np.meshgrid(*axes, indexing="ij")
        cx, cy, th, lr = (x.ravel() for x in (cx, cy, th, lr))
        r = np.exp(lr)  # axis ratio
        ct, st = np.cos(th), np.sin(th)
        # shape B = R diag(1, r) R^T ; |B a| for each face
        u1 = A[:, 0][None] * ct[:, None] + A[:, 1][None] * st[:, None]
        u2 = -A[:, 0][None] * st[:, None] + A[:, 1][None] * ct[:, None]
        norm = np.sqrt(u1**2 + (r[:, None] * u2) ** 2)
        slack = b[None] - (A[:, 0][None] * cx[:, None] + A[:, 1][None] * cy[:, None])
        s = np.min(slack / norm, axis=1)
        ok = s > 0
        val = np.full(s.shape, -np.inf)
        val[ok] = 2 * np.log(s[ok]) + np.log(r[ok])
        k = int(np.argmax(val))
        if val[k] > best[0]:
            best = (float(val[k]), np.array([cx[k], cy[k]]))
        cur = np.array([cx[k], cy[k], th[k], lr[k]])
        width = (hi - lo) / (n - 1) * 2
        lo, hi = cur - width, cur + width
    return best
