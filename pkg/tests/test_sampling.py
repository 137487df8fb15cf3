import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from cfree.errors import DimensionError, NotInteriorError, UnboundedPolytopeError
from cfree.geometry import HPolytope, Hyperplane
from cfree.sampling import SamplerConfig, chord, hit_and_run_batch

BOX = HPolytope.from_box([-1, -1], [1, 1])
UNIT = HPolytope.from_box([0, 0], [1, 1])


def grid_counts(S, bins=4):
    H, _, _ = np.histogram2d(S[:, 0], S[:, 1], bins=bins, range=[[0, 1], [0, 1]])
    return H.ravel()


def test_chord_examples():
    assert chord(BOX, [0, 0], [1, 0]) == pytest.approx((-1, 1))
    assert chord(BOX, [0.5, 0], [1, 0]) == pytest.approx((-1.5, 0.5))
    r = math.sqrt(0.5)
    assert chord(BOX, [0, 0], [r, r]) == pytest.approx((-math.sqrt(2), math.sqrt(2)))


def test_chord_unbounded():
    half = HPolytope(np.array([[1.0, 0.0]]), np.array([1.0]))
    with pytest.raises(UnboundedPolytopeError):
        chord(half, [0, 0], [1, 0])


def test_empty_request_and_shape():
    assert hit_and_run_batch(UNIT, 0, SamplerConfig()).shape == (0, 2)
    assert hit_and_run_batch(UNIT, 7, SamplerConfig(chains=3)).shape == (7, 2)


def test_uniform_chi_square():
    S = hit_and_run_batch(UNIT, 1000, SamplerConfig(mixing_steps=50, rng_seed=3))
    assert np.all(UNIT.contains_many(S))
    assert chisquare(grid_counts(S)).pvalue > 0.001


def test_deterministic_and_worker_independent():
    cfg = SamplerConfig(chains=8, rng_seed=11)
    a = hit_and_run_batch(BOX, 500, cfg, workers=1)
    b = hit_and_run_batch(BOX, 500, cfg, workers=1)
    c = hit_and_run_batch(BOX, 500, cfg, workers=4)
    assert np.array_equal(a, b) and np.array_equal(a, c)
    assert not np.array_equal(a, hit_and_run_batch(BOX, 500, cfg.with_seed(12)))


def test_start_validation():
    with pytest.raises(NotInteriorError):
        hit_and_run_batch(BOX, 5, SamplerConfig(start=(1.0, 0.0)))
    with pytest.raises(DimensionError):
        hit_and_run_batch(BOX, 5, SamplerConfig(start=(0.0, 0.0, 0.0)))
    half = HPolytope(np.array([[1.0, 0.0]]), np.array([1.0]))
    with pytest.raises(UnboundedPolytopeError):
        hit_and_run_batch(half, 5, SamplerConfig(start=(0.0, 0.0)))
    with pytest.raises(ValueError):
        SamplerConfig(chains=0)


def test_thin_polytope_samples_stay_inside():
    P = BOX.add_face(Hyperplane(np.array([0.0, 1.0]), -0.999))
    S = hit_and_run_batch(P, 400, SamplerConfig(rng_seed=5))
    assert np.all(P.contains_many(S))


@given(st.integers(0, 2**32), st.integers(1, 40), st.integers(1, 6))
@settings(max_examples=25, deadline=None)
def test_samples_inside_random_triangle(seed, n, chains):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(3, 2))
    u, w = V[1] - V[0], V[2] - V[0]
    if abs(u[0] * w[1] - u[1] * w[0]) < 1e-2:
        return
    c = V.mean(axis=0)
    A, b = [], []
    for i in range(3):
        p, q = V[i], V[(i + 1) % 3]
        nrm = np.array([q[1] - p[1], p[0] - q[0]])
        nrm /= np.linalg.norm(nrm)
        if nrm @ (c - p) > 0:
            nrm = -nrm
        A.append(nrm)
        b.append(nrm @ p)
    P = HPolytope(np.array(A), np.array(b))
    S = hit_and_run_batch(P, n, SamplerConfig(chains=chains, rng_seed=seed, start=tuple(c)))
    assert S.shape == (n, 2)
    assert np.all(P.contains_many(S, tol=1e-9))
