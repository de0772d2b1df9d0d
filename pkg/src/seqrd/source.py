"""Gauss-Markov source model and its second-moment evolution.

The source is ``s_t = alpha_t * s_{t-1} + w_t`` with ``s_0 = 0`` and
independent Gaussian innovations of variance ``W_t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError

STEADY_TOL = 1e-12
STEADY_MAX_ITER = 10**6


@dataclass(frozen=True)
class SourceSchedule:
    alphas: tuple[float, ...]
    ws: tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        ws = tuple(float(w) for w in self.ws)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "ws", ws)
        if len(alphas) != len(ws):
            raise ValidationError(
                f"alphas has length {len(alphas)} but ws has length {len(ws)}"
            )
        if len(alphas) < 1:
            raise ValidationError("schedule horizon T must be at least 1")
        for t, (a, w) in enumerate(zip(alphas, ws), start=1):
            if not abs(a) < 1:
                raise ValidationError(f"|alpha_{t}| = {abs(a)} violates |alpha| < 1")
            if not w > 0:
                raise ValidationError(f"W_{t} = {w} must be positive")

    @classmethod
    def constant(cls, alpha: float, w: float, T: int) -> "SourceSchedule":
        if int(T) != T or T < 1:
            raise ValidationError(f"T = {T} must be a positive integer")
        return cls((alpha,) * int(T), (w,) * int(T))

    @property
    def T(self) -> int:
        return len(self.alphas)

    @property
    def is_constant(self) -> bool:
        return len(set(self.alphas)) == 1 and len(set(self.ws)) == 1

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.alphas), np.asarray(self.ws)


def _check_stationary(alpha: float, w: float) -> None:
    if not abs(alpha) < 1:
        raise ValidationError(f"|alpha| = {abs(alpha)} must be < 1")
    if not w > 0:
        raise ValidationError(f"w = {w} must be positive")


def power_trace(schedule: SourceSchedule) -> np.ndarray:
    """Per-step source power ``S_1..S_T`` from ``S_t = alpha_t^2 S_{t-1} + W_t``."""
    out = np.empty(schedule.T)
    s = 0.0
    for i, (a, w) in enumerate(zip(schedule.alphas, schedule.ws)):
        s = a * a * s + w
        out[i] = s
    return out


def steady_power(alpha: float, w: float) -> float:
    _check_stationary(alpha, w)
    return w / (1.0 - alpha * alpha)


def fixed_point(
    step: Callable[[float], float],
    x0: float = 0.0,
    tol: float = STEADY_TOL,
    max_iter: int = STEADY_MAX_ITER,
) -> tuple[float, int]:
    """Iterate ``x <- step(x)`` until successive values differ by less than ``tol``.

    Returns the final iterate and the number of steps taken. Used as the
    brute-force route to steady states, independent of closed forms.
    """
    x = x0
    for n in range(1, max_iter + 1):
        nxt = step(x)
        if abs(nxt - x) < tol:
            return nxt, n
        x = nxt
    raise RuntimeError(f"no fixed point within {max_iter} iterations (last {x})")


def as_float_array(values: Sequence[float] | float, T: int, name: str) -> np.ndarray:
    """Broadcast a scalar to length ``T`` or check a sequence has length ``T``."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 1 and T != 1:
        arr = np.full(T, float(arr[0]))
    if arr.shape != (T,):
        raise ValidationError(f"{name} has length {arr.size}, expected T = {T}")
    return arr
