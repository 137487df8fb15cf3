"""Approximately uniform sampling in H-polytopes by hit-and-run.

Chains are advanced in lockstep as one vectorised state array. Every chain owns
a counter-based (Philox) stream keyed by ``(rng_seed, chain index)`` and draws
its randomness in fixed-size chunks, so the output depends only on the polytope,
the requested count and the config, never on how chains are split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from ._parallel import ordered_map, split_evenly, worker_count
from .errors import DimensionError, NotInteriorError, UnboundedPolytopeError
from .geometry import HPolytope

MIXING_PER_DIM = 50
_CHUNK = 16  # retained samples drawn per RNG call; fixed for reproducibility
_DIR_TOL = 1e-13


@dataclass(frozen=True)
class SamplerConfig:
    """Hit-and-run settings.

    ``mixing_steps=None`` resolves to ``50 * dim``. ``start=None`` lets the
    caller's context pick an interior point (the Chebyshev center as a last resort).
    """

    mixing_steps: int | None = None
    chains: int = 32
    rng_seed: int = 0
    start: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mixing_steps is not None and self.mixing_steps < 1:
            raise ValueError("mixing_steps must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.start is not None:
            object.__setattr__(self, "start", tuple(float(x) for x in np.ravel(self.start)))

    def steps_for(self, dim: int) -> int:
        return self.mixing_steps if self.mixing_steps is not None else MIXING_PER_DIM * dim

    def with_start(self, start) -> SamplerConfig:
        return replace(self, start=tuple(float(x) for x in np.ravel(start)))

    def with_seed(self, rng_seed: int) -> SamplerConfig:
        return replace(self, rng_seed=int(rng_seed))


def chain_generator(rng_seed: int, chain: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(rng_seed) & (2**64 - 1), spawn_key=(int(chain),))
    return np.random.Generator(np.random.Philox(ss))


def chord(P: HPolytope, q, direction) -> tuple[float, float]:
    """Maximal interval ``[t_lo, t_hi]`` with ``q + t * direction`` in ``P``."""
    q = np.asarray(q, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if q.shape != (P.dim,) or direction.shape != (P.dim,):
        raise DimensionError("point and direction must match the polytope dimension")
    t_lo, t_hi = _chords(P.A, P.b, P.A @ q, (P.A @ direction)[None, :])
    if not (np.isfinite(t_lo[0]) and np.isfinite(t_hi[0])):
        raise UnboundedPolytopeError("chord is unbounded; polytope is unbounded")
    return float(t_lo[0]), float(t_hi[0])


def _chords(A, b, AX, AD):
    scale = np.linalg.norm(A, axis=1)
    slack = np.maximum(b - AX, 0.0)
    pos = AD > _DIR_TOL * scale
    neg = AD < -_DIR_TOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = slack / AD
    t_hi = np.where(pos, ratio, np.inf).min(axis=-1)
    t_lo = np.where(neg, ratio, -np.inf).max(axis=-1)
    return t_lo, t_hi


@njit(cache=True, nogil=True)
def _walk(A, b, tol, X, dirs, uniforms, steps, k, out, offset):
    """Advance every chain ``k * steps`` steps, storing one point per ``steps``.

    ``dirs`` holds raw Gaussian draws and is normalised in place.

    Returns False if some chord was unbounded.
    """
    nc, d = X.shape
    m = A.shape[0]
    for c in range(nc):
        x = X[c]
        for r in range(k):
            for s in range(r * steps, (r + 1) * steps):
                u = dirs[c, s]
                nrm = 0.0
                for j in range(d):
                    nrm += u[j] * u[j]
                nrm = np.sqrt(nrm)
                for j in range(d):
                    u[j] /= nrm
                t_lo = -np.inf
                t_hi = np.inf
                for i in range(m):
                    ad = 0.0
                    ax = 0.0
                    for j in range(d):
                        ad += A[i, j] * u[j]
                        ax += A[i, j] * x[j]
                    sl = max(b[i] - ax, 0.0)
                    if ad > tol[i]:
                        t_hi = min(t_hi, sl / ad)
                    elif ad < -tol[i]:
                        t_lo = max(t_lo, sl / ad)
                if not (np.isfinite(t_lo) and np.isfinite(t_hi)):
                    return False
                t = t_lo + uniforms[c, s] * (t_hi - t_lo)
                for j in range(d):
                    x[j] += t * u[j]
            out[c, offset + r] = x
    return True


def _run_chains(A, b, start, chains, per_chain, steps, rng_seed):
    """Advance ``chains`` in lockstep; returns array (len(chains), per_chain, d)."""
    nc, d = len(chains), start.size
    gens = [chain_generator(rng_seed, j) for j in chains]
    tol = _DIR_TOL * np.linalg.norm(A, axis=1)
    X = np.tile(start, (nc, 1))
    out = np.empty((nc, per_chain, d))
    done = 0
    while done < per_chain:
        k = min(_CHUNK, per_chain - done)
        # always draw a full chunk so streams are independent of per_chain
        normals = np.stack([g.standard_normal((_CHUNK * steps, d)) for g in gens])
        uniforms = np.stack([g.random(_CHUNK * steps) for g in gens])
        if not _walk(A, b, tol, X, normals, uniforms, steps, k, out, done):
            raise UnboundedPolytopeError("hit-and-run chord is unbounded; polytope is unbounded")
        done += k
    return out


def hit_and_run_batch(P: HPolytope, n: int, cfg: SamplerConfig, workers: int | None = None) -> np.ndarray:
    """Draw ``n`` approximately uniform points of ``P``.

    Samples are spread over ``min(cfg.chains, n)`` chains, each retaining one point
    every ``mixing_steps`` steps. The result is ordered chain by chain.

    Returns
    -------
    ndarray, shape (n, dim)
    """
    d = P.dim
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty((0, d))
    if cfg.start is None:
        start, radius = P.chebyshev_center()
        if radius <= 0:
            raise NotInteriorError("polytope has no interior to start from")
    else:
        start = np.asarray(cfg.start, dtype=float)
    if start.shape != (d,):
        raise DimensionError(f"start has shape {start.shape}, polytope dimension is {d}")
    if not P.is_interior(start):
        raise NotInteriorError("hit-and-run start point is not strictly inside the polytope")

    steps = cfg.steps_for(d)
    nchains = min(cfg.chains, n)
    per_chain = -(-n // nchains)
    counts = [hi - lo for lo, hi in split_evenly(n, nchains)]
    blocks = split_evenly(nchains, worker_count(workers))
    A, b = np.ascontiguousarray(P.A), np.ascontiguousarray(P.b)

    def work(block):
        lo, hi = block
        return _run_chains(A, b, start, range(lo, hi), per_chain, steps, cfg.rng_seed)

    runs = np.concatenate(ordered_map(work, blocks, workers), axis=0)
    return np.concatenate([runs[j, :counts[j]] for j in range(nchains)], axis=0)
