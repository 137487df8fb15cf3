"""Region growing by alternating separating planes and inscribed ellipsoids.

``iris_grow`` runs the alternation. Its separating-planes step is
``zero_order_separating_planes``: sample the current polytope, run the fixed-size
Bernoulli test, and if it rejects push colliding samples toward the ellipsoid
center (or search outward along rays, or use them as-is) and cut them off with
planes tangent to the ellipsoid. ``convex_iris_separating_planes`` is the exact
baseline for worlds made of convex obstacles.
"""

from __future__ import annotations

import logging
import math
from itertools import combinations
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .collision import CollisionWorld, check_batch
from .errors import CollisionError, DimensionError, NotInteriorError
from .geometry import (
    Ellipsoid,
    HPolytope,
    Hyperplane,
    ellipsoid_metric_sq_many,
    tangent_hyperplane,
)
from .mvie import inscribed_ellipsoid
from .sampling import SamplerConfig, hit_and_run_batch
from .stattest import (
    TestSpec,
    delta_schedule_inner,
    delta_schedule_nested,
    sample_count,
    unadaptive_test,
)

log = logging.getLogger(__name__)

ACCEPTED = "accepted"
SEED_EXCLUDED = "seed_excluded"
MAX_ITERATIONS = "max_iterations"
CENTER_IN_COLLISION = "center_in_collision"


def derive_seed(master: int, *keys: int) -> int:
    """Independent 64-bit seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence(entropy=int(master) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class IrisOptions:
    """Settings for ``iris_grow``.

    ``rng_seed`` is the master seed; each (outer, inner) iteration samples from its own
    derived stream, so the sampler's own ``rng_seed`` is ignored. With
    ``max_outer_iterations == 1`` the single-loop uncertainty schedule is used,
    otherwise the nested one.
    """

    epsilon: float = 0.01
    delta: float = 0.05
    tau: float = 0.5
    stepback: float = 1e-2
    particles: int = 1000
    bisections: int = 10
    max_faces_per_iter: int = 10
    max_inner_iterations: int = 100
    max_outer_iterations: int = 3
    termination_threshold: float = 2e-2
    r_start: float = 1e-2
    candidate_generator: str = "bisection"
    ray_step_fraction: float | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    rng_seed: int = 0

    def __post_init__(self):
        TestSpec(self.epsilon, self.delta, self.tau)
        if self.stepback < 0:
            raise ValueError("stepback must be >= 0")
        for name in ("particles", "bisections", "max_faces_per_iter", "max_inner_iterations", "max_outer_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.r_start <= 0:
            raise ValueError("r_start must be positive")
        if self.termination_threshold < 0:
            raise ValueError("termination_threshold must be >= 0")
        if self.ray_step_fraction is not None and not (0 < self.ray_step_fraction <= 1):
            raise ValueError("ray_step_fraction must lie in (0, 1]")
        if self.candidate_generator not in CANDIDATE_GENERATORS:
            raise ValueError(f"unknown candidate generator {self.candidate_generator!r}")

    @property
    def test_spec(self) -> TestSpec:
        return TestSpec(self.epsilon, self.delta, self.tau)

    @property
    def single_outer(self) -> bool:
        return self.max_outer_iterations == 1

    def delta_for(self, i: int, k: int) -> float:
        if self.single_outer:
            return delta_schedule_inner(self.delta, k)
        return delta_schedule_nested(self.delta, i, k)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sampler"] = {"mixing_steps": self.sampler.mixing_steps, "chains": self.sampler.chains}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> IrisOptions:
        d = dict(d)
        sampler = d.pop("sampler", None) or {}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown option(s): {sorted(unknown)}")
        return cls(sampler=SamplerConfig(mixing_steps=sampler.get("mixing_steps"), chains=sampler.get("chains", 32)), **d)


# ---------------------------------------------------------------------------
# audit trail


@dataclass
class InnerRecord:
    k: int
    delta: float
    samples: int
    m: int
    collisions: int  # among the first m samples
    collisions_total: int
    verdict: str
    candidates: int = 0
    hyperplanes_added: int = 0
    faces: int = 0


@dataclass
class OuterRecord:
    i: int
    accepted: bool
    faces: int
    hyperplanes_added: int
    inner: list[InnerRecord] = field(default_factory=list)
    volume_proxy: float | None = None
    mvie_converged: bool | None = None


@dataclass
class SeparatingPlanesResult:
    polytope: HPolytope
    accepted: bool
    inner: list[InnerRecord]

    @property
    def hyperplanes_added(self) -> int:
        return sum(r.hyperplanes_added for r in self.inner)


@dataclass
class RegionReport:
    polytope: HPolytope
    final_ellipsoid: Ellipsoid | None
    seed: np.ndarray
    termination_reason: str
    stop_condition: str
    log: list[OuterRecord]

    @property
    def outer_iterations(self) -> int:
        return len(self.log)

    @property
    def accepted(self) -> bool:
        return self.termination_reason == ACCEPTED

    @property
    def samples_drawn(self) -> int:
        return sum(r.samples for o in self.log for r in o.inner)

    def summary(self) -> dict:
        return {
            "termination_reason": self.termination_reason,
            "stop_condition": self.stop_condition,
            "outer_iterations": self.outer_iterations,
            "faces": self.polytope.num_faces,
            "samples_drawn": self.samples_drawn,
            "log": [asdict(o) for o in self.log],
        }


# ---------------------------------------------------------------------------
# candidate generation


def bisect_to_center(q_col, c, world: CollisionWorld, n_steps: int) -> np.ndarray:
    """Colliding point on ``[c, q_col]`` next to an obstacle boundary.

    Performs ``n_steps`` halvings of the bracket between the free center and the
    colliding end; the colliding end of the final bracket is returned.
    """
    q_col = np.asarray(q_col, dtype=float)
    c = np.asarray(c, dtype=float)
    if q_col.shape != c.shape or q_col.shape != (world.dim,):
        raise DimensionError("q_col and c must be configurations of the world")
    if not world.check(q_col):
        raise CollisionError("bisection start point is not in collision")
    if world.check(c):
        raise CollisionError("bisection center is in collision")
    return bisect_many(q_col[None], c, world, n_steps)[0]


def bisect_many(Q, c, world: CollisionWorld, n_steps: int, workers: int | None = None) -> np.ndarray:
    """Vectorised ``bisect_to_center`` over the rows of ``Q`` (all assumed colliding)."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    if Q.shape[0] == 0:
        return Q.copy()
    lo = np.zeros(Q.shape[0])
    hi = np.ones(Q.shape[0])
    D = Q - c
    for _ in range(n_steps):
        mid = 0.5 * (lo + hi)
        col = check_batch(world, c + mid[:, None] * D, workers=workers)
        hi = np.where(col, mid, hi)
        lo = np.where(col, lo, mid)
    return np.where((hi == 1.0)[:, None], Q, c + hi[:, None] * D)


def ray_collision_search(sample, c, P: HPolytope, world: CollisionWorld, step_fraction: float) -> np.ndarray | None:
    """First colliding point of ``c + j * step_fraction * (sample - c)``, ``j = 1, 2, ...``.

    Returns None once a step leaves ``P`` without having hit a collision.
    """
    found = ray_search_many(np.asarray(sample, dtype=float)[None], c, P, world, step_fraction)
    return found[0]


def ray_search_many(samples, c, P: HPolytope, world: CollisionWorld, step_fraction: float,
                    workers: int | None = None) -> list[np.ndarray | None]:
    if step_fraction <= 0:
        raise ValueError("step_fraction must be positive")
    S = np.asarray(samples, dtype=float)
    c = np.asarray(c, dtype=float)
    if S.ndim != 2 or S.shape[1] != P.dim or c.shape != (P.dim,):
        raise DimensionError("samples and center must match the polytope dimension")
    D = S - c
    out: list[np.ndarray | None] = [None] * S.shape[0]
    active = np.flatnonzero(np.linalg.norm(D, axis=1) > 0)
    j = 0
    while active.size:
        j += 1
        pts = c + (j * step_fraction) * D[active]
        inside = P.contains_many(pts)
        col = np.zeros(active.size, dtype=bool)
        if inside.any():
            col[inside] = check_batch(world, pts[inside], workers=workers)
        for idx, q in zip(active[col], pts[col]):
            out[idx] = q
        active = active[inside & ~col]
    return out


def greedy_candidates(collision_samples, e: Ellipsoid, P: HPolytope | None = None) -> np.ndarray:
    """Colliding samples sorted by ellipsoidal distance to the center (stable).

    ``P`` is accepted for interface symmetry; membership is re-checked at placement
    time, where earlier planes may already have cut a candidate off.
    """
    S = np.asarray(collision_samples, dtype=float).reshape(-1, e.dim)
    order = np.argsort(ellipsoid_metric_sq_many(e, S), kind="stable")
    return S[order]


CandidateGenerator = Callable[[np.ndarray, Ellipsoid, HPolytope, CollisionWorld, IrisOptions, "int | None"], np.ndarray]


def _gen_bisection(cols, e, P, world, opts, workers):
    return bisect_many(cols[: opts.particles], e.c, world, opts.bisections, workers=workers)


def _gen_ray(cols, e, P, world, opts, workers):
    frac = opts.ray_step_fraction or 1.0 / opts.bisections
    found = ray_search_many(cols[: opts.particles], e.c, P, world, frac, workers=workers)
    hits = [q for q in found if q is not None]
    return np.array(hits) if hits else np.empty((0, P.dim))


def _gen_greedy(cols, e, P, world, opts, workers):
    # every colliding sample is a candidate
    return cols


CANDIDATE_GENERATORS: dict[str, CandidateGenerator] = {
    "bisection": _gen_bisection,
    "ray": _gen_ray,
    "greedy": _gen_greedy,
}


def register_candidate_generator(name: str, fn: CandidateGenerator) -> None:
    """Extension hook, e.g. for a nonlinear-programming closest-collision search."""
    CANDIDATE_GENERATORS[name] = fn


# ---------------------------------------------------------------------------
# hyperplane placement


def place_hyperplanes(P: HPolytope, e: Ellipsoid, candidates, stepback: float,
                      max_faces: int) -> tuple[HPolytope, list[Hyperplane]]:
    """Cut off candidates in ascending ellipsoid metric until ``max_faces`` planes are placed.

    A candidate is skipped when it is outside ``P`` or already cut off (strictly) by
    a plane placed earlier in this call. If the stepback would cut off the ellipsoid
    center, it is shrunk to half the center's distance to the plane through the candidate.
    """
    C = np.asarray(candidates, dtype=float).reshape(-1, P.dim)
    added: list[Hyperplane] = []
    if C.shape[0] == 0:
        return P, added
    order = np.argsort(ellipsoid_metric_sq_many(e, C), kind="stable")
    C = C[order]
    alive = P.contains_many(C)
    for idx in range(C.shape[0]):
        if len(added) >= max_faces:
            break
        if not alive[idx]:
            continue
        q = C[idx]
        if np.array_equal(q, e.c):
            alive[idx] = False
            continue
        h = tangent_hyperplane(e, q, 0.0)
        reach = float(h.a @ (q - e.c))
        h = Hyperplane(h.a, h.b - min(stepback, 0.5 * reach))
        added.append(h)
        alive &= C @ h.a < h.b
    for h in added:
        P = P.add_face(h)
    return P, added


# ---------------------------------------------------------------------------
# separating planes


def zero_order_separating_planes(domain: HPolytope, e: Ellipsoid, outer_i: int, world: CollisionWorld,
                                 opts: IrisOptions, workers: int | None = None) -> SeparatingPlanesResult:
    """Add planes to ``domain`` until the sampled collision rate passes the Bernoulli test.

    The returned result carries ``accepted=False`` when ``max_inner_iterations`` runs
    out first.
    """
    if e.dim != domain.dim or world.dim != domain.dim:
        raise DimensionError("domain, ellipsoid and world dimensions differ")
    if world.check(e.c):
        raise CollisionError("ellipsoid center is in collision")
    if not domain.is_interior(e.c):
        raise NotInteriorError("ellipsoid center is not strictly inside the domain")

    spec = opts.test_spec
    generator = CANDIDATE_GENERATORS[opts.candidate_generator]
    P = domain
    records: list[InnerRecord] = []
    for k in range(1, opts.max_inner_iterations + 1):
        delta_k = opts.delta_for(outer_i, k)
        m = sample_count(spec, delta_k)
        n = max(m, opts.particles)
        cfg = opts.sampler.with_start(e.c).with_seed(derive_seed(opts.rng_seed, outer_i, k))
        S = hit_and_run_batch(P, n, cfg, workers=workers)
        flags = check_batch(world, S, workers=workers)
        outcome = unadaptive_test(flags, spec, m)
        rec = InnerRecord(k, delta_k, n, m, outcome.successes, int(flags.sum()), outcome.verdict)
        records.append(rec)
        if outcome.accepted:
            rec.faces = P.num_faces
            log.debug("outer %d inner %d: accept (%d/%d)", outer_i, k, outcome.successes, m)
            return SeparatingPlanesResult(P, True, records)
        cols = S[flags]
        candidates = generator(cols, e, P, world, opts, workers)
        P, added = place_hyperplanes(P, e, candidates, opts.stepback, opts.max_faces_per_iter)
        rec.candidates = len(candidates)
        rec.hyperplanes_added = len(added)
        rec.faces = P.num_faces
        log.debug("outer %d inner %d: reject (%d/%d), +%d planes", outer_i, k, outcome.successes, m, len(added))
    return SeparatingPlanesResult(P, False, records)


def _validate_start(domain: HPolytope, seed, world: CollisionWorld | None):
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (domain.dim,):
        raise DimensionError(f"seed has shape {seed.shape}, domain dimension is {domain.dim}")
    domain.bounding_box()
    if not domain.is_interior(seed):
        raise NotInteriorError("seed is not strictly inside the domain")
    if world is not None and world.check(seed):
        raise CollisionError("seed is in collision")
    return seed


def _alternate(domain, seed, opts, separate, center_free):
    """Shared alternation loop; ``separate(e, i)`` returns a SeparatingPlanesResult."""
    e = Ellipsoid.ball(seed, opts.r_start)
    history: list[OuterRecord] = []
    certified: HPolytope | None = None
    final_e: Ellipsoid | None = None
    prev_volume = None
    reason, stop = MAX_ITERATIONS, ""
    P = domain
    for i in range(1, opts.max_outer_iterations + 1):
        res = separate(e, i)
        rec = OuterRecord(i, res.accepted, res.polytope.num_faces, res.hyperplanes_added, res.inner)
        history.append(rec)
        if not res.accepted:
            P, reason, stop = res.polytope, MAX_ITERATIONS, "inner_budget"
            break
        if not res.polytope.contains(seed):
            reason, stop = SEED_EXCLUDED, "seed_excluded"
            P = certified if certified is not None else res.polytope
            break
        P = certified = res.polytope
        mvie = inscribed_ellipsoid(P)
        rec.volume_proxy, rec.mvie_converged = mvie.log_volume_proxy, mvie.converged
        final_e = mvie.ellipsoid
        reason = ACCEPTED
        if res.hyperplanes_added == 0 and P == domain:
            stop = "fixed_point"
            break
        if prev_volume is not None and math.expm1(mvie.log_volume_proxy - prev_volume) < opts.termination_threshold:
            stop = "volume_converged"
            break
        if i == opts.max_outer_iterations:
            stop = "max_outer_iterations"
            break
        if not center_free(final_e.c):
            reason, stop = CENTER_IN_COLLISION, "center_in_collision"
            break
        prev_volume = mvie.log_volume_proxy
        e = final_e
    if final_e is None or reason in (MAX_ITERATIONS, SEED_EXCLUDED):
        try:
            final_e = inscribed_ellipsoid(P).ellipsoid
        except Exception:  # degenerate region; report without an ellipsoid
            final_e = None
    return RegionReport(P, final_e, seed, reason, stop, history)


def iris_grow(domain: HPolytope, seed, world: CollisionWorld, opts: IrisOptions | None = None,
              workers: int | None = None) -> RegionReport:
    """Grow a region around ``seed`` whose collision fraction is statistically bounded.

    When the result is ``accepted``, the returned polytope passed the Bernoulli test
    at level ``delta_{i,k}``; since these levels sum to at most ``delta`` over every
    test that could have been run, the probability that an accepted region has a
    collision fraction above ``epsilon`` is at most ``delta``.

    Raises
    ------
    CollisionError
        The seed is in collision.
    NotInteriorError
        The seed is not strictly inside the domain.
    UnboundedPolytopeError
        The domain is unbounded.
    """
    opts = opts or IrisOptions()
    if world.dim != domain.dim:
        raise DimensionError("world and domain dimensions differ")
    seed = _validate_start(domain, seed, world)

    def separate(e, i):
        return zero_order_separating_planes(domain, e, i, world, opts, workers=workers)

    return _alternate(domain, seed, opts, separate, lambda c: not world.check(c))


# ---------------------------------------------------------------------------
# convex-obstacle baseline


def _obstacle_hrep(obstacle):
    if hasattr(obstacle, "_A"):
        return obstacle._A, obstacle._b
    lo, hi = np.asarray(obstacle.lo), np.asarray(obstacle.hi)
    eye = np.eye(lo.size)
    return np.vstack([eye, -eye]), np.concatenate([hi, -lo])


def _closest_in_ball(center, radius, E, c):
    # stationarity: E (x - c) + mu (x - o) = 0 with mu > 0 chosen so ||x - o|| = r
    lam, Q = np.linalg.eigh(E)
    w = Q.T @ (c - center)
    dist = lambda mu: float(np.linalg.norm(lam * w / (lam + mu))) - radius  # noqa: E731
    hi = 1.0
    while dist(hi) > 0:
        hi *= 2.0
    mu = brentq(dist, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return center + Q @ (lam * w / (lam + mu))


def _closest_in_polytope(G, h, E, c, tol=1e-10):
    # enumerate active sets of up to dim faces and keep the best KKT point
    n = c.size
    Einv = np.linalg.inv(E)
    best, best_val = None, np.inf
    for size in range(1, n + 1):
        for S in combinations(range(G.shape[0]), size):
            GS = G[list(S)]
            K = GS @ Einv @ GS.T
            if np.linalg.matrix_rank(K) < size:
                continue
            lam = np.linalg.solve(K, GS @ c - h[list(S)])
            if np.any(lam < -tol):
                continue
            x = c - Einv @ GS.T @ lam
            if np.any(G @ x > h + tol * max(1.0, float(np.abs(h).max()))):
                continue
            val = float((x - c) @ E @ (x - c))
            if val < best_val:
                best, best_val = x, val
    if best is None:
        raise RuntimeError("no KKT point found for polytope obstacle")
    return best


def closest_point_in_metric(obstacle, e: Ellipsoid) -> np.ndarray:
    """Point of a convex obstacle minimising ``(x - c)^T E (x - c)``.

    Balls reduce to a scalar secular equation for the multiplier; boxes and
    polygons are solved exactly by enumerating active face sets.
    """
    if hasattr(obstacle, "radius"):
        return _closest_in_ball(np.asarray(obstacle.center), obstacle.radius, e.E, e.c)
    G, h = _obstacle_hrep(obstacle)
    return _closest_in_polytope(G, h, e.E, e.c)


def convex_iris_separating_planes(obstacles, e: Ellipsoid, domain: HPolytope) -> HPolytope:
    """Exact separating planes for convex obstacles: one plane per obstacle.

    Each plane passes through the obstacle point closest to ``c`` in the ellipsoid
    metric with normal ``E (x* - c)``, so it separates ``c`` from the obstacle and
    does not cut the ellipsoid.
    """
    P = domain
    for idx, o in enumerate(obstacles):
        if o.dim != e.dim:
            raise DimensionError("obstacle and ellipsoid dimensions differ")
        if o.contains_many(e.c[None])[0]:
            raise CollisionError(f"ellipsoid center lies inside obstacle {idx}")
        x_star = closest_point_in_metric(o, e)
        P = P.add_face(tangent_hyperplane(e, x_star, 0.0))
    return P


def convex_iris_grow(domain: HPolytope, seed, obstacles, opts: IrisOptions | None = None) -> RegionReport:
    """Classic alternation for convex obstacles; only the iteration limits,
    termination threshold and ``r_start`` of ``opts`` are used."""
    opts = opts or IrisOptions()
    obstacles = tuple(obstacles)
    seed = _validate_start(domain, seed, None)
    if any(o.contains_many(seed[None])[0] for o in obstacles):
        raise CollisionError("seed is in collision")

    def separate(e, i):
        P = convex_iris_separating_planes(obstacles, e, domain)
        rec = InnerRecord(1, 0.0, 0, 0, 0, 0, "accept", len(obstacles), len(obstacles), P.num_faces)
        return SeparatingPlanesResult(P, True, [rec])

    def center_free(c):
        return not any(o.contains_many(c[None])[0] for o in obstacles)

    return _alternate(domain, seed, opts, separate, center_free)
