import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfree.stattest import (
    TestSpec,
    accept_limit,
    delta_schedule_inner,
    delta_schedule_nested,
    geometric_sample_bound,
    sample_count,
    sample_count_two_sided,
    unadaptive_test,
)

# Values frozen from 50-digit mpmath evaluations.
ORACLE = {
    "m_eps0.1_delta0.1": 185,  # 184.2068...
    "m_eps0.01_delta0.05": 2397,  # 2396.5858...
    "delta1_0.05": 0.030396355092701329,
    "delta11_0.05": 0.018478768058431803,
    "two_sided_p0.1_delta0.05": 899,  # 898.72...
    "geometric_eps0.01_alpha0.95": 298,  # 297.07...
    "m_nested11_eps0.05_delta0.05": 639,  # 638.58...
}


def _mp_count(eps, tau, delta_k):
    mpmath.mp.dps = 50
    return int(mpmath.ceil(2 * mpmath.log(1 / mpmath.mpf(delta_k)) / (mpmath.mpf(eps) * mpmath.mpf(tau) ** 2)))


def test_sample_count_matches_frozen_oracles():
    assert sample_count(TestSpec(0.1, 0.1), 0.1) == ORACLE["m_eps0.1_delta0.1"]
    assert sample_count(TestSpec(0.01, 0.05), 0.05) == ORACLE["m_eps0.01_delta0.05"]
    assert sample_count(TestSpec(0.05, 0.05), delta_schedule_nested(0.05, 1, 1)) == ORACLE["m_nested11_eps0.05_delta0.05"]


@given(st.floats(1e-3, 0.5), st.floats(0.05, 1.0), st.floats(1e-6, 0.5))
@settings(max_examples=200, deadline=None)
def test_sample_count_agrees_with_high_precision(eps, tau, delta_k):
    exact = 2 * math.log(1 / delta_k) / (eps * tau * tau)
    if abs(exact - round(exact)) < 1e-7:
        return  # too close to an integer for a double to decide
    assert sample_count(TestSpec(eps, 0.5, tau), delta_k) == _mp_count(eps, tau, delta_k)


def test_schedule_values():
    assert delta_schedule_inner(0.05, 1) == pytest.approx(ORACLE["delta1_0.05"], rel=1e-14)
    assert delta_schedule_nested(0.05, 1, 1) == pytest.approx(ORACLE["delta11_0.05"], rel=1e-14)
    assert delta_schedule_inner(0.05, 3) == pytest.approx(ORACLE["delta1_0.05"] / 9, rel=1e-14)


@pytest.mark.parametrize("fn,args", [(delta_schedule_inner, (0.1, 0)), (delta_schedule_nested, (0.1, 0, 1)),
                                     (delta_schedule_nested, (0.1, 1, 0))])
def test_schedule_rejects_zero_index(fn, args):
    with pytest.raises(ValueError):
        fn(*args)


def test_inner_schedule_partial_sums_below_delta():
    k = np.arange(1, 100_001)
    assert np.sum(6 * 0.05 / (math.pi**2 * k * k)) < 0.05


def test_two_sided_and_geometric_counts():
    assert sample_count_two_sided(0.1, 0.05) == ORACLE["two_sided_p0.1_delta0.05"]
    assert geometric_sample_bound(0.01, 0.95) == ORACLE["geometric_eps0.01_alpha0.95"]
    # may legitimately be zero
    assert geometric_sample_bound(0.5, 0.4) == 0


def test_accept_reject_and_ties():
    spec = TestSpec(0.1, 0.1)
    m = 185
    limit = accept_limit(spec, m)
    assert limit == pytest.approx(9.25)
    flags = np.zeros(m, dtype=bool)
    flags[:9] = True
    assert unadaptive_test(flags, spec, m).accepted
    flags[9] = True
    assert not unadaptive_test(flags, spec, m).accepted
    # exact tie: m * (1 - tau) * eps = 5 with m = 100
    f = np.zeros(100, dtype=bool)
    f[:5] = True
    assert unadaptive_test(f, spec, 100).accepted


def test_only_first_m_flags_count():
    spec = TestSpec(0.1, 0.1)
    flags = np.concatenate([np.zeros(185, dtype=bool), np.ones(1000, dtype=bool)])
    out = unadaptive_test(flags, spec, 185)
    assert out.accepted and out.successes == 0 and out.m == 185


def test_too_few_flags_and_bad_spec():
    with pytest.raises(ValueError):
        unadaptive_test([False] * 3, TestSpec(0.1, 0.1), 5)
    for bad in [(0.0, 0.1), (0.1, 1.0), (1.5, 0.1)]:
        with pytest.raises(ValueError):
            TestSpec(*bad)
    with pytest.raises(ValueError):
        TestSpec(0.1, 0.1, tau=0.0)


@given(st.lists(st.booleans(), min_size=1, max_size=400), st.floats(0.01, 0.9), st.floats(0.1, 1.0))
@settings(max_examples=200, deadline=None)
def test_verdict_monotone_in_collisions(flags, eps, tau):
    spec = TestSpec(eps, 0.1, tau)
    m = len(flags)
    out = unadaptive_test(flags, spec, m)
    assert out.accepted == (sum(flags) <= m * (1 - tau) * eps * (1 + 1e-12))
    if out.accepted and sum(flags) > 0:
        fewer = list(flags)
        fewer[fewer.index(True)] = False
        assert unadaptive_test(fewer, spec, m).accepted


def test_count_clamps_to_one_and_schedule_symmetry():
    assert sample_count(TestSpec(0.1, 0.1), 1 - 1e-15) == 1
    assert delta_schedule_nested(0.05, 2, 5) == delta_schedule_nested(0.05, 5, 2)
    assert delta_schedule_inner(0.05, 2) == pytest.approx(delta_schedule_inner(0.05, 1) / 4, rel=1e-15)


@given(st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_two_sided_monotone_in_delta(d1, d2):
    lo, hi = sorted((d1, d2))
    assert sample_count_two_sided(0.1, lo) >= sample_count_two_sided(0.1, hi)


@given(st.floats(0.01, 0.9), st.floats(0.01, 0.98), st.floats(0.01, 0.98))
def test_geometric_bound_monotone_in_alpha(eps, a1, a2):
    lo, hi = sorted((a1, a2))
    assert geometric_sample_bound(eps, lo) <= geometric_sample_bound(eps, hi)
