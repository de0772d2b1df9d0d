import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqrd.errors import ValidationError
from seqrd.source import SourceSchedule, fixed_point, power_trace, steady_power

alphas = st.floats(-0.99, 0.99)
ws = st.floats(0.01, 10.0)


def test_first_step_is_innovation_variance():
    assert power_trace(SourceSchedule.constant(0.7, 1.0, 1))[0] == 1.0


def test_memoryless_source_is_flat():
    np.testing.assert_array_equal(power_trace(SourceSchedule.constant(0.0, 2.0, 5)), 2.0)


def test_trace_reaches_iterated_fixed_point():
    # oracle: iterate the recursion until successive values differ by < 1e-12
    s_inf, _ = fixed_point(lambda s: 0.49 * s + 1.0)
    assert s_inf == pytest.approx(1.960784, abs=1e-6)
    assert steady_power(0.7, 1.0) == pytest.approx(s_inf, abs=1e-11)
    assert power_trace(SourceSchedule.constant(0.7, 1.0, 50))[-1] == pytest.approx(s_inf, abs=1e-6)


@pytest.mark.parametrize("alpha,w,expected", [(0.0, 3.0, 3.0), (0.7, 1.0, 1.960784), (0.99, 1.0, 50.251256)])
def test_steady_power(alpha, w, expected):
    assert steady_power(alpha, w) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("alpha,w", [(1.0, 1.0), (-1.0, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_rejects_bad_constants(alpha, w):
    with pytest.raises(ValidationError):
        steady_power(alpha, w)


def test_error_names_offending_index():
    with pytest.raises(ValidationError, match="alpha_4"):
        SourceSchedule([0.5, 0.5, 0.5, 1.5], [1, 1, 1, 1])
    with pytest.raises(ValidationError, match="W_2"):
        SourceSchedule([0.5, 0.5], [1, 0])


def test_length_mismatch():
    with pytest.raises(ValidationError):
        SourceSchedule([0.5, 0.5], [1.0])


@given(alphas, ws)
def test_monotone_convergence_from_below(alpha, w):
    S = power_trace(SourceSchedule.constant(alpha, w, 200))
    assert np.all(np.diff(S) >= -1e-12 * S[1:])
    assert np.all(S <= steady_power(alpha, w) * (1 + 1e-12))
    assert np.all(S >= w * (1 - 1e-15))


@given(st.lists(st.tuples(alphas, ws), min_size=2, max_size=12), st.data())
def test_monotone_in_each_parameter(params, data):
    a = [p[0] for p in params]
    w = [p[1] for p in params]
    i = data.draw(st.integers(0, len(params) - 1))
    base = power_trace(SourceSchedule(a, w))
    w2 = list(w)
    w2[i] *= 1.5
    assert np.all(power_trace(SourceSchedule(a, w2)) >= base - 1e-12)
    a2 = list(a)
    a2[i] = np.sign(a[i] or 1.0) * min(abs(a[i]) + 0.005, 0.995)
    assert np.all(power_trace(SourceSchedule(a2, w)) >= base - 1e-12)
