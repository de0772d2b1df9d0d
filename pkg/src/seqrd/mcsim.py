"""Sample-path Monte Carlo of the predictive coding schemes.

Frames of ``N`` i.i.d. entries follow the Gauss-Markov recursion; each
quantizer is an ideal Gaussian test channel designed from the scheme's
theoretical prediction-error variance (tracked per sample path, so it is the
variance conditioned on that path's realized rates and arrivals). Empirical
mean-square errors are compared against the analytic traces.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .delayed import best_case_trace, worst_case_trace
from .errors import ValidationError
from .random_rate import (
    Deterministic,
    Erasure,
    RatePolicy,
    _as_policies,
    random_rate_trace,
    rate_factor,
    sample_rates,
)
from .rng import NORMAL_ALGORITHM, RNG_ALGORITHM, column_stats, run_shards, shard_generators, shard_sizes
from .source import SourceSchedule, power_trace


class Feedback(str, enum.Enum):
    INSTANTANEOUS = "instantaneous"
    DELAYED_ONE = "delayed"
    NONE = "none"


class Scheme(str, enum.Enum):
    GREEDY = "greedy"
    NO_PREDICTION = "no-prediction"
    WORST_CASE = "worst-case"
    BEST_CASE = "best-case"


@dataclass(frozen=True)
class SimConfig:
    schedule: SourceSchedule
    policy: RatePolicy | Sequence[RatePolicy]
    feedback: Feedback = Feedback.INSTANTANEOUS
    scheme: Scheme = Scheme.GREEDY
    frames: int = 1
    sample_count: int = 10_000
    seed: int = 0
    shards: int = 1
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "feedback", Feedback(self.feedback))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.sample_count < 2:
            raise ValidationError("sample_count must be >= 2 for standard errors")
        if self.frames < 1:
            raise ValidationError("frame length N must be >= 1")
        if self.shards < 1 or self.shards > self.sample_count:
            raise ValidationError(f"shards = {self.shards} must lie in [1, sample_count]")
        policies = self.policies
        random = [not isinstance(p, Deterministic) for p in policies]
        if self.scheme is Scheme.GREEDY:
            if self.feedback is Feedback.DELAYED_ONE:
                raise ValidationError(
                    "the side-information scheme for delayed feedback is analytic only; "
                    "use seqrd.delayed.average_trace"
                )
            if self.feedback is Feedback.NONE and any(random):
                raise ValidationError("greedy prediction over random rates needs instantaneous feedback")
        if self.scheme in (Scheme.WORST_CASE, Scheme.BEST_CASE):
            if self.feedback is not Feedback.DELAYED_ONE:
                raise ValidationError(f"{self.scheme.value} is a delayed-feedback policy")
            for t, p in enumerate(policies, start=1):
                if not isinstance(p, (Erasure, Deterministic)):
                    raise ValidationError(f"step {t}: {self.scheme.value} needs Erasure or Deterministic rates")

    @property
    def policies(self) -> list:
        return _as_policies(self.policy, self.schedule.T)


@dataclass
class SimReport:
    empirical_d: np.ndarray
    standard_errors: np.ndarray
    theory_d: np.ndarray
    max_sigma_deviation: float
    metadata: dict = field(default_factory=dict)

    @property
    def sigmas(self) -> np.ndarray:
        return _sigmas(self.empirical_d, self.theory_d, self.standard_errors)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "theory", "empirical", "stderr", "sigmas"])
        for i, row in enumerate(zip(self.theory_d, self.empirical_d, self.standard_errors, self.sigmas)):
            w.writerow([i + 1, *(f"{v:.17g}" for v in row)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "empirical_d": [float(v) for v in self.empirical_d],
                "standard_errors": [float(v) for v in self.standard_errors],
                "theory_d": [float(v) for v in self.theory_d],
                "max_sigma_deviation": float(self.max_sigma_deviation),
                "metadata": self.metadata,
            },
            indent=2,
        )

    @classmethod
    def from_csv(cls, text: str) -> "SimReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        emp = np.array([float(r["empirical"]) for r in rows])
        se = np.array([float(r["stderr"]) for r in rows])
        th = np.array([float(r["theory"]) for r in rows])
        return cls(emp, se, th, float(np.max(np.abs(_sigmas(emp, th, se)))))


@dataclass(frozen=True)
class CompareSummary:
    passed: bool
    failing_t: tuple[int, ...]
    worst_sigma: float
    worst_t: int
    tolerance_sigmas: float


def _sigmas(emp, theory, se) -> np.ndarray:
    diff = np.abs(np.asarray(emp) - np.asarray(theory))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(diff == 0, 0.0, diff / np.asarray(se))
    return np.where(np.isnan(s), np.inf, s)


def test_channel(x: np.ndarray, P, R, rng: np.random.Generator) -> np.ndarray:
    """Ideal Gaussian quantizer: ``a (x + n)`` with ``a = 1 - 2^{-2R}``.

    ``n`` has variance ``P D / (P - D)``, ``D = P 2^{-2R}``. For input of
    variance ``P`` this gives mean-square error ``D`` and an error orthogonal
    to the output. ``P`` and ``R`` broadcast over leading axes of ``x``
    (one value per sample row).
    """
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(P <= 0):
        raise ValidationError("test channel input variance P must be positive")
    if np.any(R < 0):
        raise ValidationError("test channel rate must be nonnegative")
    f = 2.0 ** (-2.0 * R)
    gain = 1.0 - f
    with np.errstate(divide="ignore", invalid="ignore"):
        std = np.where(f < 1.0, np.sqrt(P * f / np.where(f < 1.0, gain, 1.0)), 0.0)
    if x.ndim > std.ndim and std.ndim > 0:
        std = std[..., None]
        gain = gain[..., None]
    noise = rng.standard_normal(x.shape) * std
    return gain * (x + noise)


test_channel.__test__ = False  # keep pytest from collecting it


def _erasure_params(policies):
    betas = np.array([p.beta if isinstance(p, Erasure) else 1.0 for p in policies])
    rates = np.array([float(p.rate) for p in policies])
    return betas, rates


def _shard(cfg: SimConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    a, W = cfg.schedule.as_arrays()
    N = cfg.frames
    T = cfg.schedule.T
    policies = cfg.policies
    out = np.empty((n, T))
    s = np.zeros((n, N))
    shat = np.zeros((n, N))
    scheme = cfg.scheme

    if scheme in (Scheme.WORST_CASE, Scheme.BEST_CASE):
        betas, rates = _erasure_params(policies)
        shat2 = np.zeros((n, N))  # reconstruction two steps back
        d1 = np.zeros(n)  # theoretical D_{t-1} per path
        d2 = np.zeros(n)
        splus = np.zeros((n, N))  # encoder's hypothetical shat_{t-1} had packet t-1 arrived
        dplus = np.zeros(n)
        b_prev = np.ones(n, bool)
        v_prev = np.ones(n, bool)
        a_prev = w_prev = 0.0

    if scheme is Scheme.NO_PREDICTION:
        S = power_trace(cfg.schedule)

    d = np.zeros(n)
    for i in range(T):
        s = a[i] * s + math.sqrt(W[i]) * rng.standard_normal((n, N))
        if scheme is Scheme.GREEDY:
            r = sample_rates(policies[i], rng, n)
            pred = a[i] * shat
            P = a[i] ** 2 * d + W[i]
            shat = pred + test_channel(s - pred, P, r, rng)
            d = P * 2.0 ** (-2.0 * r)
        elif scheme is Scheme.NO_PREDICTION:
            r = sample_rates(policies[i], rng, n)
            shat = test_channel(s, np.full(n, S[i]), r, rng)
        elif scheme is Scheme.WORST_CASE:
            pred = a[i] * a_prev * shat2
            P = a[i] ** 2 * (a_prev**2 * d2 + w_prev) + W[i]
            q = test_channel(s - pred, P, np.full(n, rates[i]), rng)
            b = rng.random(n) < betas[i]
            new = np.where(b[:, None], pred + q, a[i] * shat)
            d_new = np.where(b, P * 2.0 ** (-2.0 * rates[i]), a[i] ** 2 * d1 + W[i])
            shat2, shat = shat, new
            d2, d1 = d1, d_new
        else:  # best case
            pred = a[i] * splus
            P = a[i] ** 2 * dplus + W[i]
            q = test_channel(s - pred, P, np.full(n, rates[i]), rng)
            b = rng.random(n) < betas[i]
            v = b_prev | ~v_prev
            fallback = a[i] * shat
            d_fallback = a[i] ** 2 * d1 + W[i]
            splus = np.where(v[:, None], pred + q, fallback)
            dplus = np.where(v, P * 2.0 ** (-2.0 * rates[i]), d_fallback)
            shat = np.where(b[:, None], splus, fallback)
            d1 = np.where(b, dplus, d_fallback)
            b_prev, v_prev = b, v
        if scheme in (Scheme.WORST_CASE, Scheme.BEST_CASE):
            a_prev, w_prev = a[i], W[i]
        out[:, i] = np.mean((s - shat) ** 2, axis=1)
    return out


def theory_trace(cfg: SimConfig) -> np.ndarray:
    policies = cfg.policies
    if cfg.scheme is Scheme.GREEDY:
        return random_rate_trace(cfg.schedule, policies).values
    if cfg.scheme is Scheme.NO_PREDICTION:
        return power_trace(cfg.schedule) * np.array([rate_factor(p) for p in policies])
    betas, rates = _erasure_params(policies)
    if cfg.scheme is Scheme.WORST_CASE:
        return worst_case_trace(cfg.schedule, rates, betas).values
    return best_case_trace(cfg.schedule, rates, betas).values


def simulate(cfg: SimConfig) -> SimReport:
    jobs = [
        (cfg, n, g)
        for n, g in zip(shard_sizes(cfg.sample_count, cfg.shards), shard_generators(cfg.seed, cfg.shards))
    ]
    parts = run_shards(_shard, jobs, cfg.workers)
    emp, se = column_stats(np.concatenate(parts))
    theory = theory_trace(cfg)
    sig = _sigmas(emp, theory, se)
    meta = {
        "scheme": cfg.scheme.value,
        "feedback": cfg.feedback.value,
        "frames": cfg.frames,
        "sample_count": cfg.sample_count,
        "effective_samples_per_t": cfg.frames * cfg.sample_count,
        "seed": cfg.seed,
        "shards": cfg.shards,
        "rng": RNG_ALGORITHM,
        "normal_sampler": NORMAL_ALGORITHM,
    }
    return SimReport(emp, se, theory, float(np.max(sig)), meta)


def compare(report: SimReport, tolerance_sigmas: float) -> CompareSummary:
    """Flag every step whose empirical mean is more than ``tolerance_sigmas``
    standard errors from theory."""
    sig = report.sigmas
    failing = tuple(int(i) + 1 for i in np.flatnonzero(sig > tolerance_sigmas))
    worst = int(np.argmax(sig))
    return CompareSummary(not failing, failing, float(sig[worst]), worst + 1, tolerance_sigmas)
