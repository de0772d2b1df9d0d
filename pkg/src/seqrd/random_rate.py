"""Random per-step rate budgets, packet erasures with instantaneous feedback,
and splitting a frame across several packets.

Everything reduces to the rate factor ``B_t = E[2^{-2 r_t}]``: with rates
independent across time the optimal trace is

    D_t = (alpha_t^2 D_{t-1} + W_t) B_t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError
from .region import DistortionTrace, _recursion
from .source import SourceSchedule, _check_stationary

EXACT_BINOMIAL_MAX_N = 64
PROB_SUM_TOL = 1e-12


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta = {beta} must lie in [0, 1]")


def _check_rate(rate: float) -> None:
    if not rate >= 0:
        raise ValidationError(f"rate = {rate} must be nonnegative")


@dataclass(frozen=True)
class Deterministic:
    rate: float

    def __post_init__(self):
        _check_rate(self.rate)

    def support(self) -> list[tuple[float, float]]:
        return [(float(self.rate), 1.0)]


@dataclass(frozen=True)
class Discrete:
    """Arbitrary finite rate distribution given as ``(rate, probability)`` pairs."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pairs = tuple((float(r), float(p)) for r, p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise ValidationError("discrete rate distribution needs at least one atom")
        for r, p in pairs:
            _check_rate(r)
            if not p >= 0:
                raise ValidationError(f"probability {p} must be nonnegative")
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    def support(self) -> list[tuple[float, float]]:
        return list(self.pairs)


@dataclass(frozen=True)
class Erasure:
    """One packet of rate ``rate`` per frame, arriving with probability ``beta``."""

    beta: float
    rate: float

    def __post_init__(self):
        _check_beta(self.beta)
        _check_rate(self.rate)

    def support(self) -> list[tuple[float, float]]:
        return [(float(self.rate), float(self.beta)), (0.0, 1.0 - self.beta)]


@dataclass(frozen=True)
class MultiPacket:
    """``n`` packets of rate ``rate / n`` each, erased independently."""

    beta: float
    rate: float
    n: int

    def __post_init__(self):
        _check_beta(self.beta)
        _check_rate(self.rate)
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"packet count n = {self.n} must be a positive integer")

    def support(self) -> list[tuple[float, float]]:
        n = int(self.n)
        return [(k * self.rate / n, binomial_pmf(n, k, self.beta)) for k in range(n + 1)]


RatePolicy = Union[Deterministic, Discrete, Erasure, MultiPacket]


def binomial_pmf(n: int, k: int, p: float) -> float:
    # exact integer coefficients for small n, log-space above that
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    if n <= EXACT_BINOMIAL_MAX_N:
        return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)
    logc = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(logc + k * math.log(p) + (n - k) * math.log1p(-p))


def _expect(policy: RatePolicy, exponent: float) -> float:
    return math.fsum(p * 2.0 ** (-exponent * r) for r, p in policy.support())


def rate_factor(policy: RatePolicy) -> float:
    """``E[2^{-2 r}]`` under ``policy``."""
    if isinstance(policy, Deterministic):
        return 2.0 ** (-2.0 * policy.rate)
    if isinstance(policy, Erasure):
        return 1.0 - policy.beta * (1.0 - 2.0 ** (-2.0 * policy.rate))
    if isinstance(policy, (Discrete, MultiPacket)):
        if all(r == 0.0 for r, p in policy.support() if p > 0):
            return 1.0
        # probabilities may sum to 1 + ulp
        return min(1.0, _expect(policy, 2.0))
    raise ValidationError(f"unknown rate policy {policy!r}")


def mean_rate(policy: RatePolicy) -> float:
    return math.fsum(p * r for r, p in policy.support())


def sample_rates(policy: RatePolicy, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(policy, Deterministic):
        return np.full(size, float(policy.rate))
    if isinstance(policy, Erasure):
        return np.where(rng.random(size) < policy.beta, float(policy.rate), 0.0)
    if isinstance(policy, MultiPacket):
        return rng.binomial(int(policy.n), policy.beta, size) * (policy.rate / policy.n)
    rates, probs = zip(*policy.support())
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    return np.asarray(rates)[np.minimum(idx, len(rates) - 1)]


def _as_policies(policies, T: int) -> list:
    if not isinstance(policies, (list, tuple)):
        return [policies] * T
    if len(policies) != T:
        raise ValidationError(f"got {len(policies)} rate policies, expected T = {T}")
    return list(policies)


def random_rate_trace(
    schedule: SourceSchedule, policies: Sequence[RatePolicy] | RatePolicy
) -> DistortionTrace:
    policies = _as_policies(policies, schedule.T)
    factors = [rate_factor(p) for p in policies]
    values = _recursion(schedule.alphas, schedule.ws, factors)
    steady = None
    if schedule.is_constant and len(set(factors)) == 1:
        steady = steady_random(schedule.alphas[0], schedule.ws[0], factors[0])
    return DistortionTrace(values, steady)


def steady_random(alpha: float, w: float, B: float) -> float:
    _check_stationary(alpha, w)
    if not 0.0 < B <= 1.0:
        raise ValidationError(f"rate factor B = {B} must lie in (0, 1]")
    return B * w / (1.0 - alpha * alpha * B)


OBJECTIVES = {"squared": 2.0, "single": 1.0}


def optimize_packets(
    R: float, beta: float, n_max: int, objective: str = "squared"
) -> tuple[int, tuple[float, ...]]:
    """Pick the packet count ``n`` in ``1..n_max`` minimizing the expected factor.

    ``objective="squared"`` minimizes ``E[2^{-2r}]`` (the factor entering the
    distortion recursion); ``"single"`` minimizes ``E[2^{-r}]``. Returns the
    minimizer (ties go to the smaller ``n``) and the factor for every ``n``.
    """
    if objective not in OBJECTIVES:
        raise ValidationError(f"objective must be one of {sorted(OBJECTIVES)}")
    if int(n_max) != n_max or n_max < 1:
        raise ValidationError(f"n_max = {n_max} must be a positive integer")
    exponent = OBJECTIVES[objective]
    factors = tuple(_expect(MultiPacket(beta, R, n), exponent) for n in range(1, int(n_max) + 1))
    best = min(range(len(factors)), key=lambda i: (factors[i], i))
    return best + 1, factors
