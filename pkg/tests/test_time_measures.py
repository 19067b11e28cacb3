import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psido_ivp.time_measures import (
    DyadicSequence,
    TimeMeasure,
    ainfty_blocks_density,
    control_sequence,
    density_ap_constant,
    dirac,
    doubling_constant,
    laplace,
    laplace_equivalence_check,
    lebesgue,
    log_laplace,
    measure_from_spec,
    power_density,
    power_measure,
    power_sum_density,
    weak_scaling_constants,
    weighted_time_integral,
)

LN2 = math.log(2)


def test_laplace_power_closed_form():
    assert laplace(power_measure(0.5), 4.0) == pytest.approx(math.gamma(1.5) * 4**-1.5, rel=1e-8)
    assert laplace(power_measure(0.5), 4.0) == pytest.approx(0.110779, rel=1e-5)


@pytest.mark.parametrize("a", [0.0, 0.5, 2.0, -0.5])
def test_laplace_power_ladder(a):
    for k in range(-6, 7):
        lam = 2.0**k
        assert laplace(power_measure(a), lam) == pytest.approx(math.gamma(a + 1) * lam ** (-(a + 1)), rel=1e-8)


def test_laplace_atom_and_lebesgue():
    assert laplace(dirac(2.0), 3.0) == pytest.approx(math.exp(-6), rel=1e-15)
    assert laplace(lebesgue(), 1.0) == pytest.approx(1.0, rel=1e-12)


def test_laplace_errors():
    with pytest.raises(ValueError):
        laplace(lebesgue(), 0.0)
    with pytest.raises(ValueError):
        power_measure(-1.0)


def test_log_laplace_survives_underflow():
    # e^{-2^40} underflows; the log stays exact
    assert log_laplace(dirac(1.0), 2.0**40) == pytest.approx(-(2.0**40), rel=1e-15)


MEASURES = [
    lebesgue(),
    power_measure(0.5),
    power_measure(-0.5),
    TimeMeasure(power_sum_density([0, 1])),
    TimeMeasure(ainfty_blocks_density()),
    dirac(0.25),
    TimeMeasure(power_density(1.0), ((0.5, 2.0),)),
]


@pytest.mark.parametrize("m", MEASURES)
def test_laplace_nonincreasing(m):
    vals = [log_laplace(m, 2.0**k) for k in np.arange(-10, 10, 0.5)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("m", MEASURES)
def test_control_round_trip(m):
    gamma, a = 2.0, 0.5
    ctl = control_sequence(m, gamma, a, (-6, 6))
    for j in range(-6, 7):
        lhs = (gamma * j * a - ctl.sequence(j)) * LN2
        assert lhs == pytest.approx(log_laplace(m, 2.0 ** (gamma * j)), rel=1e-10, abs=1e-10)


def test_control_power_density_example():
    seq = control_sequence(lebesgue(), 2.0, 0.0, (-5, 5)).sequence
    assert np.allclose(seq.differences, 2.0, atol=1e-10)
    b1, a, gamma = 0.5, 0.25, 1.5
    seq = control_sequence(power_measure(b1), gamma, a, (-4, 4)).sequence
    for j in range(-4, 5):
        assert seq(j) == pytest.approx(j * gamma * (a + b1 + 1) - math.log2(math.gamma(b1 + 1)), abs=1e-9)


def test_control_dirac_example():
    t0, gamma, a = 0.25, 2.0, 1.0
    seq = control_sequence(dirac(t0), gamma, a, (-3, 4)).sequence
    for j in range(-3, 5):
        assert seq(j) == pytest.approx(gamma * j * a + 2 ** (gamma * j) * t0 * math.log2(math.e), rel=1e-12)


def test_control_two_branch():
    gamma, a = 2.0, 0.5
    seq = control_sequence(TimeMeasure(power_sum_density([0, 1])), gamma, a, (-10, 10)).sequence
    d = dict(zip(seq.indices[:-1], seq.differences))
    assert d[9] == pytest.approx(gamma * (a + 0 + 1), abs=1e-3)
    assert d[-10] == pytest.approx(gamma * (a + 1 + 1), abs=1e-3)


def test_doubling_examples():
    assert doubling_constant(lebesgue(), 2).value == pytest.approx(2.0, rel=1e-9)
    assert doubling_constant(power_measure(1.0), 2).value == pytest.approx(4.0, rel=1e-9)
    res = doubling_constant(dirac(1.0), 2)
    assert res.infinite and res.value == math.inf


def test_doubling_bounds_control_differences():
    gamma, a = 2.0, 0.5
    for m in (lebesgue(), power_measure(0.5), TimeMeasure(power_sum_density([0, 1])), TimeMeasure(ainfty_blocks_density())):
        n = doubling_constant(m, 2.0**gamma).value
        seq = control_sequence(m, gamma, a, (-8, 8)).sequence
        assert seq.diff_seminorm <= gamma * a + math.log2(n) + 1e-9
        for j in range(-8, 8):
            r = math.exp(log_laplace(m, 2.0 ** (gamma * (j + 1))) - log_laplace(m, 2.0 ** (gamma * j)))
            assert 1 / n - 1e-12 <= r <= 1 + 1e-12


def test_weak_scaling_examples():
    ws = weak_scaling_constants(lebesgue(), 2)
    assert (ws.b_k, ws.B_k) == pytest.approx((0.5, 0.5), rel=1e-12)
    assert ws.verdict
    ws = weak_scaling_constants(dirac(1.0), 2)
    assert ws.B_k == 1.0 and not ws.verdict


def test_weak_scaling_ainfty_blocks_bound():
    dens = ainfty_blocks_density()
    ws = weak_scaling_constants(TimeMeasure(dens), 2)
    a2 = density_ap_constant(dens, 2.0)
    assert ws.b_k >= 1 / (2**2 * a2)
    assert ws.verdict


def test_laplace_equivalence_examples():
    lo, hi = laplace_equivalence_check(lebesgue(), 0.0)
    assert lo == pytest.approx(1.0, rel=1e-10) and hi == pytest.approx(1.0, rel=1e-10)
    lo, hi = laplace_equivalence_check(power_measure(1.0), 0.0)
    assert lo == pytest.approx(2.0, rel=1e-10) and hi == pytest.approx(2.0, rel=1e-10)
    lo, hi = laplace_equivalence_check(power_measure(0.5), 0.25)
    assert hi / lo - 1 <= 1e-6


def test_laplace_equivalence_rejects_large_a0():
    with pytest.raises(ValueError):
        laplace_equivalence_check(lebesgue(), 1.0)


def test_weighted_time_integral_examples():
    assert weighted_time_integral(lebesgue(), 1.0, 1.0, lambda t: np.ones_like(t), 2.0) == pytest.approx(2.0, rel=1e-12)
    assert weighted_time_integral(lebesgue(), 0.0, 1.0, lambda t: np.exp(-t), 3.0) == pytest.approx(
        1 - math.exp(-3), rel=1e-12)
    assert weighted_time_integral(dirac(1.0), 2.0, 1.0, lambda t: np.ones_like(t), 2.0) == pytest.approx(1.0)


def test_weighted_time_integral_scaled_rule():
    # integral f(t) mu(c dt) = integral f(t / c) mu(dt)
    m = power_measure(0.5)
    c = 1 / 16
    g = lambda t: np.exp(-t)  # noqa: E731
    lhs = weighted_time_integral(m, 0.0, c, g, 1e6)
    rhs = weighted_time_integral(m, 0.0, 1.0, lambda t: np.exp(-t / c), 1e6)
    assert lhs == pytest.approx(rhs, rel=1e-10)
    atom = TimeMeasure(None, ((0.5, 1.0),))
    assert weighted_time_integral(atom, 0.0, 0.25, lambda t: t, 10.0) == pytest.approx(2.0)


def test_integral_rejects_divergent_tilt():
    with pytest.raises(ValueError):
        weighted_time_integral(lebesgue(), -1.0, 1.0, lambda t: np.ones_like(t), 1.0)


@settings(max_examples=25, deadline=None)
@given(slope=st.floats(-3, 3), offset=st.floats(-5, 5), lo=st.integers(-10, 0), hi=st.integers(1, 10))
def test_linear_sequence_seminorm(slope, offset, lo, hi):
    seq = DyadicSequence.linear(slope, lo, hi, offset)
    assert seq.diff_seminorm == pytest.approx(abs(slope), abs=1e-9)
    assert (seq - seq).diff_seminorm == 0


def test_measure_spec_round_trip():
    for m in MEASURES:
        again = measure_from_spec(m.to_spec())
        assert log_laplace(again, 3.0) == pytest.approx(log_laplace(m, 3.0), rel=1e-14)
