"""Bernoulli sample-count formulas, the fixed-size accept/reject test and its
union-bound uncertainty schedules.

A region is *accepted* when the observed collision rate over ``M`` uniform samples
is at most ``(1 - tau) * epsilon``. With ``M = ceil(2 ln(1/delta) / (epsilon tau^2))``
a region whose true collision fraction is ``>= epsilon`` is accepted with
probability at most ``delta`` (multiplicative Chernoff bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

DEFAULT_TAU = 0.5
DEFAULT_TAU_MINUS = 0.5
# relative slack on the accept threshold so that exact ties survive float round-off
_TIE_RTOL = 1e-12


def _check_open_unit(name: str, x: float) -> None:
    if not (0.0 < x < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


@dataclass(frozen=True)
class TestSpec:
    """Admissible collision fraction ``epsilon``, uncertainty ``delta`` and margin ``tau``."""

    __test__ = False  # keep pytest from collecting this class

    epsilon: float
    delta: float
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        _check_open_unit("epsilon", self.epsilon)
        _check_open_unit("delta", self.delta)
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")

    @property
    def threshold(self) -> float:
        return (1.0 - self.tau) * self.epsilon


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    verdict: Literal["accept", "reject"]
    m: int
    successes: int
    threshold: float

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "m": self.m, "successes": self.successes, "threshold": self.threshold}


def _ceil_count(x: float) -> int:
    return max(1, math.ceil(x))


def sample_count(spec: TestSpec, delta_k: float) -> int:
    """``M = ceil(2 ln(1/delta_k) / (epsilon tau^2))``, at least 1."""
    _check_open_unit("delta_k", delta_k)
    return _ceil_count(2.0 * math.log(1.0 / delta_k) / (spec.epsilon * spec.tau**2))


def accept_limit(spec: TestSpec, m: int) -> float:
    """Largest collision count (as a real number) that still accepts."""
    return m * spec.threshold


def unadaptive_test(collision_flags: Sequence[bool], spec: TestSpec, m: int) -> TestOutcome:
    """Accept iff at most ``m (1 - tau) epsilon`` of the first ``m`` flags are set.

    Only the first ``m`` entries are inspected; any surplus is ignored.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    flags = np.asarray(collision_flags, dtype=bool)
    if flags.ndim != 1 or flags.size < m:
        raise ValueError(f"need at least {m} flags, got {flags.size}")
    successes = int(np.count_nonzero(flags[:m]))
    limit = accept_limit(spec, m)
    verdict = "accept" if successes <= limit * (1.0 + _TIE_RTOL) else "reject"
    return TestOutcome(verdict, m, successes, spec.threshold)


def delta_schedule_inner(delta: float, k: int) -> float:
    """``6 delta / (pi^2 k^2)``; sums to ``delta`` over ``k >= 1``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 6.0 * delta / (math.pi**2 * k * k)


def delta_schedule_nested(delta: float, i: int, k: int) -> float:
    """``36 delta / (pi^4 i^2 k^2)``; sums to ``delta`` over ``i, k >= 1``."""
    if i < 1 or k < 1:
        raise ValueError("i and k must be >= 1")
    return 36.0 * delta / (math.pi**4 * i * i * k * k)


def sample_count_two_sided(p: float, delta: float, tau: float = DEFAULT_TAU, tau_minus: float = DEFAULT_TAU_MINUS) -> int:
    """Sample count that also bounds false rejection.

    With this many samples the test rejects with probability ``>= 1 - delta`` when the
    true rate is ``>= p`` and accepts with probability ``>= 1 - delta`` when it is
    ``<= (1 - tau) p / (1 + tau_minus)``.
    """
    for name, x in (("p", p), ("delta", delta), ("tau", tau), ("tau_minus", tau_minus)):
        _check_open_unit(name, x)
    factor = max(2.0 / tau**2, (2.0 + tau_minus) * (1.0 + tau_minus) / (tau_minus**2 * (1.0 - tau)))
    return _ceil_count(math.log(1.0 / delta) * factor / p)


def geometric_sample_bound(epsilon: float, alpha: float) -> int:
    """Consecutive collision-free draws needed before declaring a region free.

    ``ceil(ln(1 - alpha) / ln(1 - epsilon) - 1)``. Kept for comparison with the
    fixed-size test; unlike the other counts it may be 0.
    """
    _check_open_unit("epsilon", epsilon)
    _check_open_unit("alpha", alpha)
    return max(0, math.ceil(math.log1p(-alpha) / math.log1p(-epsilon) - 1.0))
