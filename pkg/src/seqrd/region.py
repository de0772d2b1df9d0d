"""Optimal distortion-rate boundary for deterministic per-step rates.

With an ideal greedy predictive quantizer the per-step distortion obeys

    D_t = (alpha_t^2 D_{t-1} + W_t) 2^{-2 R_t},   D_0 = 0,

and no causal scheme can do better at any step, so the returned trace is the
boundary of the achievable region: any tuple ``D' >= D`` componentwise is
achievable, nothing below it is. Asymptotic slack (large frame length) is
taken as zero here; see :mod:`seqrd.mcsim` for sample-level checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .source import SourceSchedule, _check_stationary, as_float_array


@dataclass(frozen=True)
class DistortionTrace:
    values: np.ndarray
    steady: Optional[float] = None

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _recursion(alphas, drive, factors) -> np.ndarray:
    out = np.empty(len(factors))
    d = 0.0
    for i in range(len(factors)):
        d = (alphas[i] ** 2 * d + drive[i]) * factors[i]
        out[i] = d
    return out


def _check_rates(rates: np.ndarray) -> None:
    bad = np.flatnonzero(~(rates >= 0))
    if bad.size:
        t = int(bad[0]) + 1
        raise ValidationError(f"rate R_{t} = {rates[t - 1]} must be nonnegative")


def distortion_trace(schedule: SourceSchedule, rates: Sequence[float] | float) -> DistortionTrace:
    rates = as_float_array(rates, schedule.T, "rates")
    _check_rates(rates)
    values = _recursion(schedule.alphas, schedule.ws, 2.0 ** (-2.0 * rates))
    steady = None
    if schedule.is_constant and np.all(rates == rates[0]):
        steady = steady_distortion(schedule.alphas[0], schedule.ws[0], float(rates[0]))
    return DistortionTrace(values, steady)


def steady_distortion(alpha: float, w: float, rate: float) -> float:
    _check_stationary(alpha, w)
    if not rate >= 0:
        raise ValidationError(f"rate = {rate} must be nonnegative")
    f = 2.0 ** (-2.0 * rate)
    return w * f / (1.0 - alpha * alpha * f)


def distortion_trace_ep(
    schedule: SourceSchedule,
    entropy_powers: Sequence[float] | float,
    rates: Sequence[float] | float,
) -> DistortionTrace:
    """Lower bound for non-Gaussian innovations.

    Same recursion as :func:`distortion_trace` with each innovation variance
    replaced by the innovation's entropy power ``2^{2h(w_t)} / (2 pi e)``,
    which the caller supplies. Entropy power never exceeds variance, so each
    value is checked against the schedule's ``W_t``.
    """
    eps = as_float_array(entropy_powers, schedule.T, "entropy_powers")
    rates = as_float_array(rates, schedule.T, "rates")
    _check_rates(rates)
    for t, (ep, w) in enumerate(zip(eps, schedule.ws), start=1):
        if not ep > 0:
            raise ValidationError(f"entropy power EP_{t} = {ep} must be positive")
        if ep > w * (1 + 1e-12):
            raise ValidationError(f"entropy power EP_{t} = {ep} exceeds variance W_{t} = {w}")
    values = _recursion(schedule.alphas, eps, 2.0 ** (-2.0 * rates))
    steady = None
    if schedule.is_constant and np.all(rates == rates[0]) and np.all(eps == eps[0]):
        a2f = schedule.alphas[0] ** 2 * 2.0 ** (-2.0 * rates[0])
        steady = float(eps[0] * 2.0 ** (-2.0 * rates[0]) / (1.0 - a2f))
    return DistortionTrace(values, steady)
