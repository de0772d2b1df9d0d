"""Gaussian rate function for lossy coding with side information that the
encoder always has and the decoder may or may not have (Kaspi's problem),
and its inversion at a fixed rate.

The side information enters as ``s = y + z`` with ``y`` known to the encoder
and ``z`` independent Gaussian of variance ``Z``. ``D-`` is the distortion
target for the decoder without ``y``, ``D+`` for the decoder with it. All
logarithms are base 2; rates are bits per sample.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError

PHI = (math.sqrt(5.0) - 1.0) / 2.0
INNER_RATE_TOL = 1e-11
OUTER_TOL = 1e-10
SCAN_POINTS = 17
GRID_POINTS = 4096


class KaspiCase(str, enum.Enum):
    ZERO = "Zero"
    NO_SI_BINDING = "NoSIBinding"
    SI_BINDING = "SIBinding"
    COUPLED = "Coupled"


class UnclassifiableError(RuntimeError):
    pass


@dataclass(frozen=True)
class KaspiPoint:
    S: float
    Z: float
    d_minus: float
    d_plus: float

    def __post_init__(self):
        for name in ("S", "Z", "d_minus", "d_plus"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} = {getattr(self, name)} must be positive")
        if self.Z > self.S:
            raise ValidationError(f"Z = {self.Z} exceeds S = {self.S}")


@dataclass(frozen=True)
class KaspiSolution:
    d_minus: float
    d_plus: float
    weighted: float
    case_id: KaspiCase
    achieved_rate: float
    method: str = "golden"


def harmonic_mean(a: float, b: float) -> float:
    """``a || b = ab / (a + b)``."""
    if not (a > 0 and b > 0):
        raise ValidationError(f"harmonic mean needs positive inputs, got {a}, {b}")
    return a * b / (a + b)


def _rdf(var: float, d: float) -> float:
    return 0.5 * math.log2(var / d) if d < var else 0.0


def _case(S, Z, dm, dp) -> KaspiCase:
    # first match in listed order decides boundary points
    if dm >= S and dp >= Z:
        return KaspiCase.ZERO
    if dm < S and dp * S / (dp + S) >= dm * Z / (dm + Z):
        return KaspiCase.NO_SI_BINDING
    # dm >= S implies the SI condition; spelled out so rounding of dp + S - Z
    # cannot leave a point unclassified
    if dp < Z and (dm >= S or dm >= dp + S - Z):
        return KaspiCase.SI_BINDING
    if dm < S and dm < dp + S - Z:
        return KaspiCase.COUPLED
    raise UnclassifiableError(f"no case matches S={S}, Z={Z}, D-={dm}, D+={dp}")


def _delta(S, Z, dm, dp) -> float:
    r1 = (S - Z) * (S - dm)
    r2 = (Z - dp) * (dm - dp)
    # rounding on a case boundary can leave a radicand a few ulps below zero
    slack = 1e-13 * S * S
    r1 = 0.0 if -slack < r1 < 0 else r1
    r2 = 0.0 if -slack < r2 < 0 else r2
    if r1 < 0 or r2 < 0:
        raise ValidationError(f"negative radicand in delta at S={S}, Z={Z}, D-={dm}, D+={dp}")
    if S == dp:
        raise ValidationError("delta undefined for D+ = S")
    return (math.sqrt(r1) * dp - math.sqrt(r2) * S) / (math.sqrt(Z) * (S - dp))


def _rate(S, Z, dm, dp) -> float:
    case = _case(S, Z, dm, dp)
    if case is KaspiCase.ZERO:
        return 0.0
    if case is KaspiCase.NO_SI_BINDING:
        return _rdf(S, dm)
    if case is KaspiCase.SI_BINDING:
        return _rdf(Z, dp)
    return _rdf(S, dm - _delta(S, Z, dm, dp) ** 2)


def classify_case(p: KaspiPoint) -> KaspiCase:
    return _case(p.S, p.Z, p.d_minus, p.d_plus)


def kaspi_delta(p: KaspiPoint) -> float:
    """Coupling term of the fourth case; the sign is kept, only its square matters."""
    return _delta(p.S, p.Z, p.d_minus, p.d_plus)


def kaspi_rate(p: KaspiPoint) -> float:
    return _rate(p.S, p.Z, p.d_minus, p.d_plus)


def _min_d_minus_bisect(S, Z, dp, rate) -> float:
    """Smallest D- with rate(S, Z, D-, dp) <= ``rate``, by monotone bisection."""
    lo = S * 2.0 ** (-2.0 * rate - 2.0)
    hi = S
    if _rate(S, Z, hi, dp) > rate + INNER_RATE_TOL:
        raise SolverError(
            f"cannot bracket D- for S={S}, Z={Z}, D+={dp}, R={rate}: "
            f"rate at D-=S is {_rate(S, Z, hi, dp)}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _rate(S, Z, mid, dp) <= rate + INNER_RATE_TOL:
            hi = mid
        else:
            lo = mid
    return hi


def _coupled_root(S, Z, dp, d):
    """Solve ``D- - delta^2 = d`` inside the coupled region, or return None.

    With ``u = sqrt(S - D-)`` and ``v = sqrt(D- - D+)`` we have
    ``u^2 + v^2 = S - D+`` and delta linear in ``(u, v)``, so the equation is
    a quadratic form on a circle: ``m + rho cos(2 theta - phi) = tau``.
    """
    M = S - dp
    K2 = Z * M * M
    A = math.sqrt((S - Z)) * dp
    B = math.sqrt(max(Z - dp, 0.0)) * S
    q11 = 1.0 + A * A / K2
    q22 = B * B / K2
    q12 = -A * B / K2
    a, b = 0.5 * (q11 - q22), q12
    rho = math.hypot(a, b)
    if rho == 0.0:
        return None
    c = ((S - d) / M - 0.5 * (q11 + q22)) / rho
    if not -1.0 - 1e-12 <= c <= 1.0 + 1e-12:
        return None
    phi = math.atan2(b, a)
    acos = math.acos(min(1.0, max(-1.0, c)))
    best = None
    for two_theta in (phi + acos, phi - acos, phi + acos + 2 * math.pi, phi - acos + 2 * math.pi):
        if -1e-12 <= two_theta <= math.pi + 1e-12:
            u2 = M * math.cos(0.5 * two_theta) ** 2
            x = S - u2
            if best is None or x < best:
                best = x
    return best


def _min_d_minus(S, Z, dp, rate) -> float:
    """Smallest D- with rate(S, Z, D-, dp) <= ``rate``.

    Rate is nonincreasing in D-: below the no-SI boundary it is
    ``R(S, D-)``, above the SI boundary it is flat at ``R(Z, D+)``, and in
    between the coupled root is found in closed form. Falls back to
    bisection if the closed form misses.
    """
    d = S * 2.0 ** (-2.0 * rate)
    if dp >= Z:
        return d
    h = dp * S / (dp + S)
    x_b = h * Z / (Z - h) if h < Z else math.inf
    if d <= x_b:
        return d
    x_s = dp + S - Z
    if Z * 2.0 ** (-2.0 * rate) == dp:
        return x_s
    x = _coupled_root(S, Z, dp, d)
    if x is not None and x_b <= x <= x_s * (1 + 1e-12):
        x = min(x, x_s)
        # rate error ~ 0.72 |g - d| / d bits
        if abs(x - _delta(S, Z, x, dp) ** 2 - d) <= INNER_RATE_TOL * d:
            return x
    return _min_d_minus_bisect(S, Z, dp, rate)


def _objective(S, Z, rate, beta):
    def f(dp):
        dm = _min_d_minus(S, Z, dp, rate)
        return beta * dp + (1.0 - beta) * dm, dm

    return f


def _is_unimodal(values, tol) -> bool:
    i = int(np.argmin(values))
    left = np.diff(values[: i + 1])
    right = np.diff(values[i:])
    return bool(np.all(left <= tol) and np.all(right >= -tol))


def _golden(f, a, b, tol):
    x1 = b - PHI * (b - a)
    x2 = a + PHI * (b - a)
    f1 = f(x1)[0]
    f2 = f(x2)[0]
    while b - a > tol:
        if f2 > f1:
            b, x2, f2 = x2, x1, f1
            x1 = b - PHI * (b - a)
            f1 = f(x1)[0]
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + PHI * (b - a)
            f2 = f(x2)[0]
    return 0.5 * (a + b)


def _grid_refine(f, xs):
    vals = np.array([f(x)[0] for x in xs])
    i = int(np.argmin(vals))
    best = xs[i]
    if 0 < i < len(xs) - 1:
        x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
        y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
        Bc = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
        if A > 0:
            xv = -Bc / (2 * A)
            if x0 < xv < x2 and f(xv)[0] < vals[i]:
                best = xv
    return best


def _solution(S, Z, dm, dp, beta, method) -> KaspiSolution:
    dm, dp = float(dm), float(dp)
    return KaspiSolution(
        d_minus=dm,
        d_plus=dp,
        weighted=beta * dp + (1.0 - beta) * dm,
        case_id=_case(S, Z, dm, dp),
        achieved_rate=_rate(S, Z, dm, dp),
        method=method,
    )


def invert_weighted(S: float, Z: float, rate: float, beta: float) -> KaspiSolution:
    """Minimize ``beta*D+ + (1-beta)*D-`` over the rate-``rate`` contour.

    Outer golden-section search over ``D+`` in ``[Z 2^{-2R}, Z]``, inner
    solve for the smallest ``D-`` meeting the rate. A coarse scan first
    checks the outer objective is unimodal; if not, a dense grid with a
    parabolic refinement step is used instead.
    """
    if not (S > 0 and Z > 0):
        raise ValidationError(f"S = {S} and Z = {Z} must be positive")
    if Z > S:
        raise ValidationError(f"Z = {Z} exceeds S = {S}")
    if not rate > 0:
        raise ValidationError(f"rate = {rate} must be positive for a nontrivial inversion")
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta = {beta} must lie in [0, 1]")

    f2r = 2.0 ** (-2.0 * rate)
    if beta == 0.0:
        dm = S * f2r
        return _solution(S, Z, dm, min(Z, dm), beta, "closed-form")
    lo, hi = Z * f2r, Z
    if beta == 1.0:
        return _solution(S, Z, _min_d_minus(S, Z, lo, rate), lo, beta, "closed-form")

    f = _objective(S, Z, rate, beta)
    xs = np.linspace(lo, hi, SCAN_POINTS)
    vals = np.array([f(x)[0] for x in xs])
    if _is_unimodal(vals, 1e-13 * S):
        i = int(np.argmin(vals))
        a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        dp = _golden(f, a, b, OUTER_TOL)
        method = "golden"
        # endpoints of the scan can beat an interior golden estimate on flat tails
        if vals[i] < f(dp)[0]:
            dp = xs[i]
    else:
        dp = _grid_refine(f, np.linspace(lo, hi, GRID_POINTS))
        method = "grid"
    dm = f(dp)[1]
    sol = _solution(S, Z, dm, dp, beta, method)
    if sol.case_id is not KaspiCase.ZERO and abs(sol.achieved_rate - rate) > 1e-9:
        raise SolverError(
            f"inversion missed the rate contour: achieved {sol.achieved_rate}, wanted {rate} "
            f"(S={S}, Z={Z}, beta={beta}, D-={dm}, D+={dp})"
        )
    return sol


def kaspi_rate_grid(S, Z, dm, dp) -> np.ndarray:
    """Vectorized rate over arrays of ``(D-, D+)``; for brute-force checks."""
    dm, dp = np.broadcast_arrays(np.asarray(dm, float), np.asarray(dp, float))
    hm_p = dp * S / (dp + S)
    hm_m = dm * Z / (dm + Z)
    zero = (dm >= S) & (dp >= Z)
    nosi = ~zero & (dm < S) & (hm_p >= hm_m)
    si = ~zero & ~nosi & (dp < Z) & ((dm >= S) | (dm >= dp + S - Z))
    coupled = ~zero & ~nosi & ~si
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.sqrt((S - Z) * np.clip(S - dm, 0, None)) * dp - np.sqrt(
            np.clip(Z - dp, 0, None) * np.clip(dm - dp, 0, None)
        ) * S
        delta = num / (np.sqrt(Z) * (S - dp))
        out = np.zeros(dm.shape)
        out = np.where(nosi, 0.5 * np.log2(S / dm), out)
        out = np.where(si, 0.5 * np.log2(Z / dp), out)
        out = np.where(coupled, 0.5 * np.log2(S / (dm - delta**2)), out)
    return np.maximum(out, 0.0)
