"""Packet erasures with feedback delayed by one step.

At time ``t`` the encoder knows the arrival bits ``b_1..b_{t-2}`` but not
``b_{t-1}``. The side-information scheme treats the previous packet as side
information the decoder may or may not have and designs each packet by
:func:`seqrd.kaspi.invert_weighted`. Realized distortion along an arrival
pattern follows

    D_t = D+_t                    if b_t and b_{t-1}
          D-_t                    if b_t and not b_{t-1}
          alpha^2 D_{t-1} + W     if not b_t

with ``D_1 = W 2^{-2R}`` on arrival and ``W`` on erasure.

Encoder state used to build the side-information problem at ``t >= 2``:

* ``no_si_var = alpha^2 D_{t-2} + W``: error at ``t-1`` had packet ``t-1``
  been lost (``D_0 = 0``).
* ``si_var``: error at ``t-1`` had packet ``t-1`` arrived, i.e. the design
  target ``D+_{t-1}`` if ``b_{t-2} = 1`` and ``D-_{t-1}`` otherwise.
* ``S_t = alpha^2 no_si_var + W`` and ``Z_t = alpha^2 si_var + W``.

``literal_alpha=True`` uses ``alpha`` instead of ``alpha^2`` in the last
line, for comparison against the unsquared form of the rate constraint.

Also here: the three simple baselines (no prediction, assume the previous
packet was lost, assume it arrived), evaluated exactly in expectation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetError, SolverError, ValidationError
from .kaspi import KaspiSolution, invert_weighted
from .region import DistortionTrace
from .rng import column_stats, shard_generators, shard_sizes
from .source import SourceSchedule, as_float_array, power_trace

EXACT_MAX_T = 22


@dataclass(frozen=True)
class ErasurePattern:
    bits: tuple[bool, ...]

    def __post_init__(self):
        bits = tuple(bool(b) for b in self.bits)
        object.__setattr__(self, "bits", bits)
        if len(bits) < 1:
            raise ValidationError("erasure pattern needs T >= 1")

    @classmethod
    def from_string(cls, s: str) -> "ErasurePattern":
        return cls(tuple(c == "1" for c in s.strip()))

    @property
    def T(self) -> int:
        return len(self.bits)

    def probability(self, beta: float) -> float:
        k = sum(self.bits)
        return beta**k * (1.0 - beta) ** (self.T - k)


@dataclass(frozen=True)
class DelayedState:
    d_minus_target: float
    d_plus_target: float
    d_realized: float


@dataclass(frozen=True)
class AveragedTrace:
    values: np.ndarray
    method: str
    standard_errors: Optional[np.ndarray] = None
    samples: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.method == "exact" and self.standard_errors is not None:
            raise ValidationError("exact averages carry no standard errors")


def _check_params(alpha, w, rate, beta):
    if not abs(alpha) < 1:
        raise ValidationError(f"|alpha| = {abs(alpha)} must be < 1")
    if not w > 0:
        raise ValidationError(f"w = {w} must be positive")
    if not rate > 0:
        raise ValidationError(f"rate = {rate} must be positive")
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta = {beta} must lie in [0, 1]")


class _Designer:
    """Memoized packet design ``(S, Z) -> (D-, D+)`` for fixed parameters."""

    def __init__(self, alpha, w, rate, beta, literal_alpha=False):
        self.a2 = alpha * alpha
        self.c = alpha if literal_alpha else alpha * alpha
        self.w = w
        self.rate = rate
        self.beta = beta
        self.cache: dict[tuple[float, float], KaspiSolution] = {}

    def design(self, t: int, no_si_var: float, si_var: float) -> KaspiSolution:
        S = self.c * no_si_var + self.w
        Z = self.c * si_var + self.w
        key = (S, Z)
        sol = self.cache.get(key)
        if sol is None:
            if not (S > 0 and Z > 0):
                raise ValidationError(f"t={t}: nonpositive design variances S={S}, Z={Z}")
            try:
                sol = invert_weighted(S, min(Z, S), self.rate, self.beta)
            except SolverError as exc:
                raise SolverError(f"t={t}: {exc}") from exc
            self.cache[key] = sol
        return sol


def pattern_trace(
    alpha: float,
    w: float,
    rate: float,
    beta: float,
    pattern: ErasurePattern,
    literal_alpha: bool = False,
    _designer: Optional[_Designer] = None,
) -> list[DelayedState]:
    _check_params(alpha, w, rate, beta)
    des = _designer or _Designer(alpha, w, rate, beta, literal_alpha)
    bits = pattern.bits
    d1 = w * 2.0 ** (-2.0 * rate)
    states = [DelayedState(d1, d1, d1 if bits[0] else w)]
    d_prev2, d_prev, si_var = 0.0, states[0].d_realized, d1
    for t in range(2, pattern.T + 1):
        sol = des.design(t, des.a2 * d_prev2 + w, si_var)
        got_prev = bits[t - 2]
        target = sol.d_plus if got_prev else sol.d_minus
        d = target if bits[t - 1] else des.a2 * d_prev + w
        states.append(DelayedState(sol.d_minus, sol.d_plus, d))
        d_prev2, d_prev, si_var = d_prev, d, target
    return states


def _exact(des: _Designer, w, rate, beta, T) -> np.ndarray:
    # level-by-level walk of the arrival tree; prefixes that land in the same
    # state are merged, so each distinct state is expanded once
    d1 = w * 2.0 ** (-2.0 * rate)
    branches = [(True, beta), (False, 1.0 - beta)]
    means = np.zeros(T)
    level: dict[tuple, float] = {}
    for b, p in branches:
        if p > 0:
            key = (0.0, d1 if b else w, d1, b)
            level[key] = level.get(key, 0.0) + p
    means[0] = math.fsum(p * k[1] for k, p in level.items())
    for t in range(2, T + 1):
        nxt: dict[tuple, float] = {}
        for (d_prev2, d_prev, si_var, got_prev), prob in level.items():
            sol = des.design(t, des.a2 * d_prev2 + w, si_var)
            target = sol.d_plus if got_prev else sol.d_minus
            for b, p in branches:
                if p > 0:
                    d = target if b else des.a2 * d_prev + w
                    key = (d_prev, d, target, b)
                    nxt[key] = nxt.get(key, 0.0) + prob * p
        level = nxt
        means[t - 1] = math.fsum(p * k[1] for k, p in level.items())
    return means


def _mc_shard(des: _Designer, w, rate, beta, T, n, rng) -> np.ndarray:
    d1 = w * 2.0 ** (-2.0 * rate)
    out = np.empty((n, T))
    b = rng.random(n) < beta
    d_prev2 = np.zeros(n)
    d_prev = np.where(b, d1, w)
    si_var = np.full(n, d1)
    out[:, 0] = d_prev
    for t in range(2, T + 1):
        no_si = des.a2 * d_prev2 + w
        keys, inv = np.unique(no_si + 1j * si_var, return_inverse=True)
        sols = [des.design(t, float(k.real), float(k.imag)) for k in keys]
        dm = np.array([s.d_minus for s in sols])[inv]
        dp = np.array([s.d_plus for s in sols])[inv]
        target = np.where(b, dp, dm)
        b = rng.random(n) < beta
        d = np.where(b, target, des.a2 * d_prev + w)
        out[:, t - 1] = d
        d_prev2, d_prev, si_var = d_prev, d, target
    return out


def average_trace(
    alpha: float,
    w: float,
    rate: float,
    beta: float,
    T: int,
    method: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    shards: int = 1,
    literal_alpha: bool = False,
) -> AveragedTrace:
    """Average realized distortion over i.i.d. Bernoulli(beta) arrival patterns.

    ``method="exact"`` enumerates every pattern (``T <= 22``);
    ``method="montecarlo"`` draws ``samples`` patterns. Monte Carlo output is
    a deterministic function of ``(seed, shards)``.
    """
    _check_params(alpha, w, rate, beta)
    if int(T) != T or T < 1:
        raise ValidationError(f"T = {T} must be a positive integer")
    des = _Designer(alpha, w, rate, beta, literal_alpha)
    if method == "exact":
        if T > EXACT_MAX_T:
            raise BudgetError(f"exact averaging is capped at T = {EXACT_MAX_T}, got {T}")
        return AveragedTrace(_exact(des, w, rate, beta, int(T)), "exact")
    if method in ("montecarlo", "mc"):
        if samples < 1:
            raise ValidationError(f"samples = {samples} must be >= 1")
        parts = [
            _mc_shard(des, w, rate, beta, int(T), n, g)
            for n, g in zip(shard_sizes(samples, shards), shard_generators(seed, shards))
        ]
        means, se = column_stats(np.concatenate(parts))
        return AveragedTrace(means, "montecarlo", se, samples, seed)
    raise ValidationError(f"unknown averaging method {method!r}")


# ---------------------------------------------------------------- baselines
#
# Expected distortion of each baseline, exact. The general forms take
# per-step schedules, rates and arrival probabilities; the scalar wrappers
# match the stationary setting.


def no_prediction_trace(schedule: SourceSchedule, rates, betas) -> DistortionTrace:
    T = schedule.T
    rates = as_float_array(rates, T, "rates")
    betas = as_float_array(betas, T, "betas")
    S = power_trace(schedule)
    f = 2.0 ** (-2.0 * rates)
    return DistortionTrace(S * (betas * f + 1.0 - betas))


def worst_case_trace(schedule: SourceSchedule, rates, betas) -> DistortionTrace:
    """Encoder always predicts from the reconstruction two steps back.

    The packet at ``t`` quantizes ``s_t - alpha_t alpha_{t-1} shat_{t-2}``,
    which the decoder can always use on arrival; an erasure falls back to
    ``alpha_t shat_{t-1}``. In expectation (arrivals independent of the past):

        E[D_t] = beta 2^{-2R} P_t + (1 - beta)(alpha_t^2 E[D_{t-1}] + W_t)
        P_t    = alpha_t^2 alpha_{t-1}^2 E[D_{t-2}] + alpha_t^2 W_{t-1} + W_t
    """
    T = schedule.T
    rates = as_float_array(rates, T, "rates")
    betas = as_float_array(betas, T, "betas")
    a, W = schedule.as_arrays()
    out = np.empty(T)
    m2 = m1 = 0.0
    a_prev = w_prev = 0.0
    for i in range(T):
        P = a[i] ** 2 * (a_prev**2 * m2 + w_prev) + W[i]
        m = betas[i] * 2.0 ** (-2.0 * rates[i]) * P + (1.0 - betas[i]) * (a[i] ** 2 * m1 + W[i])
        out[i] = m
        m2, m1 = m1, m
        a_prev, w_prev = a[i], W[i]
    return DistortionTrace(out)


def best_case_trace(schedule: SourceSchedule, rates, betas) -> DistortionTrace:
    """Encoder always predicts as if the previous packet arrived.

    The packet at ``t`` quantizes ``s_t - alpha_t shat+_{t-1}`` where
    ``shat+_{t-1}`` is the decoder's reconstruction had packet ``t-1``
    arrived. The decoder uses the packet only if its own state matches that
    premise, which holds when ``b_{t-1} = 1`` or when packet ``t-1`` was
    unusable anyway (then both hypotheses coincide). Usability thus follows
    ``v_t = b_{t-1} or not v_{t-1}`` with ``v_1 = 1``; an unusable or erased
    packet falls back to ``alpha_t shat_{t-1}``.

    The expectation is propagated over the finite chain ``(b_t, v_t)`` by
    carrying the probability and the first moments of ``D_t`` and ``D+_t``
    restricted to each chain state.
    """
    T = schedule.T
    rates = as_float_array(rates, T, "rates")
    betas = as_float_array(betas, T, "betas")
    a, W = schedule.as_arrays()
    # chain state (b, v) -> [probability, E[D 1{state}], E[D+ 1{state}]]
    level = {(True, True): [1.0, 0.0, 0.0]}
    out = np.empty(T)
    for i in range(T):
        a2, w, f = a[i] ** 2, W[i], 2.0 ** (-2.0 * rates[i])
        nxt: dict[tuple[bool, bool], list[float]] = {}
        for (b_prev, v_prev), (pi, md, mp) in level.items():
            v = b_prev or not v_prev
            fallback = a2 * md + w * pi
            dplus = (a2 * mp + w * pi) * f if v else fallback
            for b, pb in ((True, betas[i]), (False, 1.0 - betas[i])):
                if pb == 0:
                    continue
                acc = nxt.setdefault((b, v), [0.0, 0.0, 0.0])
                acc[0] += pb * pi
                acc[1] += pb * (dplus if b else fallback)
                acc[2] += pb * dplus
        level = nxt
        out[i] = math.fsum(v[1] for v in level.values())
    return DistortionTrace(out)


def _stationary(alpha, w, rate, beta, T):
    _check_params(alpha, w, rate, beta)
    return SourceSchedule.constant(alpha, w, T)


def baseline_no_prediction(alpha, w, rate, beta, T) -> DistortionTrace:
    return no_prediction_trace(_stationary(alpha, w, rate, beta, T), rate, beta)


def baseline_worst_case(alpha, w, rate, beta, T) -> DistortionTrace:
    return worst_case_trace(_stationary(alpha, w, rate, beta, T), rate, beta)


def baseline_best_case(alpha, w, rate, beta, T) -> DistortionTrace:
    return best_case_trace(_stationary(alpha, w, rate, beta, T), rate, beta)


def prediction_only_trace(alpha: float, w: float, T: int) -> np.ndarray:
    """``D_t = alpha^2 D_{t-1} + W`` from ``D_0 = 0``: nothing ever arrives."""
    out = np.empty(T)
    d = 0.0
    for i in range(T):
        d = alpha * alpha * d + w
        out[i] = d
    return out
