import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqrd.errors import ValidationError
from seqrd.random_rate import (
    Deterministic,
    Discrete,
    Erasure,
    MultiPacket,
    binomial_pmf,
    mean_rate,
    optimize_packets,
    random_rate_trace,
    rate_factor,
    sample_rates,
    steady_random,
)
from seqrd.region import distortion_trace
from seqrd.source import SourceSchedule, fixed_point, power_trace

const = SourceSchedule.constant
betas = st.floats(0.0, 1.0)
rates = st.one_of(st.just(0.0), st.floats(1e-3, 8.0))


def pattern_sum(beta, R, n, exponent=2.0):
    """Average of 2^{-exponent * r} over all 2^n arrival patterns."""
    total = 0.0
    for arrived in itertools.product((0, 1), repeat=n):
        k = sum(arrived)
        total += beta**k * (1 - beta) ** (n - k) * 2.0 ** (-exponent * R * k / n)
    return total


def test_pattern_oracle_values():
    # frozen from the enumeration above
    assert pattern_sum(0.5, 1.0, 1) == 0.625
    assert pattern_sum(0.5, 1.0, 2) == 0.5625
    assert pattern_sum(0.5, 1.0, 3) == pytest.approx(0.5413040454773075, abs=1e-15)
    assert pattern_sum(0.5, 5.5, 1) == pytest.approx(0.500244140625, abs=1e-15)
    assert pattern_sum(0.5, 5.5, 2) == pytest.approx(0.2611706137685398, abs=1e-15)
    assert pattern_sum(0.5, 5.5, 3) == pytest.approx(0.15691572927288014, abs=1e-15)


@pytest.mark.parametrize(
    "policy,expected",
    [
        (Deterministic(2.0), 0.0625),
        (Erasure(0.5, 2.0), 0.53125),
        (Erasure(1.0, 1.5), 2.0**-3),
        (Erasure(0.0, 3.0), 1.0),
        (MultiPacket(0.5, 1.0, 2), 0.5625),
        (Discrete(((0.0, 0.25), (1.0, 0.25), (2.0, 0.5))), 0.25 + 0.0625 + 0.03125),
    ],
)
def test_rate_factor_examples(policy, expected):
    assert rate_factor(policy) == pytest.approx(expected, rel=1e-15)


@given(betas, rates, st.integers(1, 10))
def test_multipacket_matches_pattern_enumeration(beta, R, n):
    assert rate_factor(MultiPacket(beta, R, n)) == pytest.approx(pattern_sum(beta, R, n), rel=1e-13)


@given(betas, rates, st.integers(1, 64))
def test_two_construction_paths_agree(beta, R, n):
    support = tuple((k * R / n, math.comb(n, k) * beta**k * (1 - beta) ** (n - k)) for k in range(n + 1))
    if abs(math.fsum(p for _, p in support) - 1.0) > 1e-12:
        return
    assert rate_factor(MultiPacket(beta, R, n)) == pytest.approx(rate_factor(Discrete(support)), abs=1e-14)


@given(st.integers(31, 64), st.floats(0.01, 0.99))
def test_log_space_binomial(n, p):
    exact = [math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)]
    np.testing.assert_allclose([binomial_pmf(n, k, p) for k in range(n + 1)], exact, rtol=1e-11, atol=1e-300)


def policies():
    return st.one_of(
        st.builds(Deterministic, rates),
        st.builds(Erasure, betas, rates),
        st.builds(MultiPacket, betas, rates, st.integers(1, 6)),
    )


@given(policies())
def test_jensen_and_range(policy):
    B = rate_factor(policy)
    assert 0.0 < B <= 1.0
    lower = 2.0 ** (-2.0 * mean_rate(policy))
    assert B >= lower * (1 - 1e-12)
    atoms = [r for r, p in policy.support() if p > 0]
    if len({r for r, p in policy.support() if p > 1e-6}) > 1:
        assert B > lower
    if all(r == 0.0 for r in atoms):
        assert B == 1.0
    if any(r > 0 and p > 1e-6 for r, p in policy.support()):
        assert B < 1.0


def test_traces():
    s = const(0.7, 1.0, 30)
    np.testing.assert_array_equal(random_rate_trace(s, Deterministic(2.0)).values, distortion_trace(s, 2.0).values)
    np.testing.assert_allclose(random_rate_trace(s, Erasure(0.0, 2.0)).values, power_trace(s), rtol=1e-15)
    d_inf, _ = fixed_point(lambda d: (0.49 * d + 1.0) * 0.53125)
    tr = random_rate_trace(const(0.7, 1.0, 60), Erasure(0.5, 2.0))
    assert tr.values[-1] == pytest.approx(0.53125 / 0.7396875, abs=1e-12)
    assert tr.steady == pytest.approx(d_inf, abs=1e-12)
    with pytest.raises(ValidationError):
        random_rate_trace(s, [Erasure(0.5, 2.0)] * 29)


def test_steady_random():
    assert steady_random(0.7, 1.0, 0.53125) == pytest.approx(0.53125 / 0.7396875, rel=1e-14)
    assert steady_random(0.6, 2.0, 1.0) == pytest.approx(2.0 / 0.64)
    assert steady_random(0.0, 2.0, 0.3) == pytest.approx(0.6)
    for bad in (0.0, 1.5):
        with pytest.raises(ValidationError):
            steady_random(0.7, 1.0, bad)


@given(st.floats(0.0, 0.95), st.floats(0.1, 5), policies())
def test_geometric_convergence(alpha, w, policy):
    B = rate_factor(policy)
    tr = random_rate_trace(const(alpha, w, 6), policy).values
    d_inf = steady_random(alpha, w, B)
    gaps = d_inf - tr
    np.testing.assert_allclose(gaps[1:], alpha**2 * B * gaps[:-1], rtol=0, atol=1e-13 * max(1.0, d_inf))


def test_optimize_packets():
    n, f = optimize_packets(1.0, 0.5, 3)
    assert n == 3
    np.testing.assert_allclose(f, [pattern_sum(0.5, 1.0, k) for k in (1, 2, 3)], rtol=1e-14)
    n, f = optimize_packets(1.0, 0.5, 3, objective="single")
    np.testing.assert_allclose(f, [pattern_sum(0.5, 1.0, k, 1.0) for k in (1, 2, 3)], rtol=1e-14)
    n, f = optimize_packets(2.0, 1.0, 5)
    assert n == 1 and np.allclose(f, 2.0**-4)
    with pytest.raises(ValidationError):
        optimize_packets(1.0, 0.5, 3, objective="cubed")
    with pytest.raises(ValidationError):
        optimize_packets(1.0, 0.5, 0)


@given(betas, rates, st.integers(1, 8))
def test_factors_above_jensen_limit(beta, R, n_max):
    _, f = optimize_packets(R, beta, n_max)
    assert min(f) >= 2.0 ** (-2 * beta * R) * (1 - 1e-12)


@pytest.mark.parametrize("policy", [Erasure(0.3, 2.0), MultiPacket(0.6, 3.0, 4), Discrete(((0.5, 0.2), (1.5, 0.8)))])
def test_sampler_matches_factor(policy):
    r = sample_rates(policy, np.random.default_rng(5), 400_000)
    x = 2.0 ** (-2.0 * r)
    assert abs(x.mean() - rate_factor(policy)) < 4 * x.std() / math.sqrt(x.size)


def test_policy_validation():
    for bad in (lambda: Erasure(1.2, 1.0), lambda: Deterministic(-1.0), lambda: MultiPacket(0.5, 1.0, 0),
                lambda: Discrete(((1.0, 0.5),)), lambda: Discrete(())):
        with pytest.raises(ValidationError):
            bad()
