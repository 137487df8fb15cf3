"""Deterministic SVG rendering of 2D configuration spaces."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ..collision import CollisionWorld, check_batch
from ..geometry import Ellipsoid, HPolytope

RESOLUTION = 400
CANVAS = 600.0
MARGIN = 20.0
ELLIPSE_POINTS = 128
STYLE = """
.domain { fill: none; stroke: #000; stroke-width: 1.5 }
.obstacle { fill: #9a9a9a; stroke: none; shape-rendering: crispEdges }
.region { fill-opacity: 0.15; stroke-width: 2 }
.ellipse { fill: none; stroke-width: 1; stroke-dasharray: 4 2 }
.seed { stroke: #000; stroke-width: 0.5 }
.sample { fill: #222; fill-opacity: 0.5 }
""".strip()
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def fmt(x: float) -> str:
    return f"{x:.9g}"


def polygon_vertices(P: HPolytope, tol: float = 1e-9) -> np.ndarray:
    """Vertices of a bounded 2D polytope in counter-clockwise order.

    Intersects every pair of face lines, keeps intersections that satisfy all
    faces, merges near-duplicates and sorts by angle around their mean.
    """
    if P.dim != 2:
        raise ValueError("vertex enumeration here is 2D only")
    A, b = P.A, P.b
    pts = []
    for i, j in combinations(range(A.shape[0]), 2):
        M = A[[i, j]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[[i, j]])
        if np.all(A @ x <= b + tol * np.maximum(1.0, np.abs(b))):
            pts.append(x)
    if not pts:
        return np.empty((0, 2))
    V = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= 1e-9 for q in V):
            V.append(p)
    V = np.array(V)
    mid = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - mid[1], V[:, 0] - mid[0]), kind="stable")
    return V[order]


def raster_centers(lo, hi, resolution: int = RESOLUTION) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinates along x and y of a ``resolution``-square grid."""
    xs = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    ys = lo[1] + (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    return xs, ys


def obstacle_raster(world: CollisionWorld, lo, hi, resolution: int = RESOLUTION,
                    workers: int | None = None) -> np.ndarray:
    """Boolean grid ``[row_y, col_x]`` of collision flags at the cell centers."""
    xs, ys = raster_centers(lo, hi, resolution)
    X, Y = np.meshgrid(xs, ys)
    flags = check_batch(world, np.column_stack([X.ravel(), Y.ravel()]), workers=workers)
    return flags.reshape(resolution, resolution)


def raster_runs(mask: np.ndarray) -> list[tuple[int, int, int]]:
    """Run-length encode each row: (row, first column, length) of True runs."""
    runs = []
    for r in range(mask.shape[0]):
        row = np.concatenate([[False], mask[r], [False]])
        edges = np.flatnonzero(row[1:] != row[:-1])
        for s, e in zip(edges[::2], edges[1::2]):
            runs.append((r, int(s), int(e - s)))
    return runs


def ellipse_outline(e: Ellipsoid, n: int = ELLIPSE_POINTS) -> np.ndarray:
    # boundary = c + L^{-T} u for unit u, with E = L L^T
    L = np.linalg.cholesky(e.E)
    t = 2.0 * math.pi * np.arange(n) / n
    U = np.stack([np.cos(t), np.sin(t)])
    return (e.c[:, None] + np.linalg.solve(L.T, U)).T


class _Canvas:
    def __init__(self, lo, hi):
        self.lo, self.hi = np.asarray(lo, float), np.asarray(hi, float)
        span = self.hi - self.lo
        self.scale = (CANVAS - 2 * MARGIN) / float(span.max())
        self.width = span[0] * self.scale + 2 * MARGIN
        self.height = span[1] * self.scale + 2 * MARGIN

    def xy(self, p) -> tuple[float, float]:
        return (MARGIN + (p[0] - self.lo[0]) * self.scale, MARGIN + (self.hi[1] - p[1]) * self.scale)

    def points(self, V) -> str:
        return " ".join(f"{fmt(x)},{fmt(y)}" for x, y in (self.xy(p) for p in V))


def render_svg(world: CollisionWorld, domain: HPolytope, regions: list[tuple[HPolytope, Ellipsoid | None, np.ndarray | None]],
               resolution: int = RESOLUTION, samples: np.ndarray | None = None, workers: int | None = None) -> str:
    if domain.dim != 2:
        raise ValueError("only 2D configuration spaces can be plotted")
    lo, hi = domain.bounding_box()
    cv = _Canvas(lo, hi)
    cell = (hi - lo) / resolution
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fmt(cv.width)}" height="{fmt(cv.height)}" '
        f'viewBox="0 0 {fmt(cv.width)} {fmt(cv.height)}">',
        f"<style>\n{STYLE}\n</style>",
        f'<g id="obstacles" data-resolution="{resolution}">',
    ]
    mask = obstacle_raster(world, lo, hi, resolution, workers)
    for r, c0, n in raster_runs(mask):
        x, y = cv.xy((lo[0] + c0 * cell[0], lo[1] + (r + 1) * cell[1]))
        out.append(f'<rect class="obstacle" data-row="{r}" data-col="{c0}" data-len="{n}" x="{fmt(x)}" y="{fmt(y)}" '
                   f'width="{fmt(n * cell[0] * cv.scale)}" height="{fmt(cell[1] * cv.scale)}"/>')
    out.append("</g>")
    out.append(f'<polygon class="domain" points="{cv.points(polygon_vertices(domain))}"/>')
    for j, (P, e, seed) in enumerate(regions):
        color = PALETTE[j % len(PALETTE)]
        out.append(f'<g id="region-{j}">')
        out.append(f'<polygon class="region region-{j}" fill="{color}" stroke="{color}" '
                   f'points="{cv.points(polygon_vertices(P))}"/>')
        if e is not None:
            out.append(f'<polygon class="ellipse ellipse-{j}" stroke="{color}" points="{cv.points(ellipse_outline(e))}"/>')
        if seed is not None:
            x, y = cv.xy(seed)
            out.append(f'<circle class="seed seed-{j}" fill="{color}" cx="{fmt(x)}" cy="{fmt(y)}" r="4"/>')
        out.append("</g>")
    if samples is not None and len(samples):
        out.append('<g id="samples">')
        for p in samples:
            x, y = cv.xy(p)
            out.append(f'<circle class="sample" cx="{fmt(x)}" cy="{fmt(y)}" r="1"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
