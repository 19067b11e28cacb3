import math

import numpy as np
import pytest

from conftest import band_limited
from psido_ivp.spectral_core import SpectralField, make_grid
from psido_ivp.weights import (
    BallFamily,
    ap_constant_estimate,
    ap_constant_profile,
    cell_average_power,
    maximal_function,
    membership_heuristic,
    order_candidates,
    power_weight,
    regularity_constant,
    sharp_function,
    unit_weight,
    weight_from_spec,
    window_double_oscillation,
    window_oscillations,
)


def grid(n=1024, L=32.0):
    return make_grid(1, n, L)


def test_unit_weight_constant_is_one():
    assert ap_constant_estimate(unit_weight(), 2, grid(256, 16.0)) == pytest.approx(1.0, rel=1e-12)


def test_sqrt_weight_estimate_stable_under_refinement():
    vals = [ap_constant_estimate(power_weight(0.5), 2, grid(n, 32.0)) for n in (256, 512, 1024)]
    assert all(1.15 <= v <= 1.5 for v in vals)
    assert max(vals) / min(vals) <= 1.05


def test_quadratic_weight_diverges_near_origin():
    g = grid()
    w = power_weight(2.0)
    # cubes holding the origin node see an infinite average of w^-1
    assert ap_constant_estimate(w, 2, g) == math.inf
    # off the origin node the estimate keeps growing with the cube size
    # relative to the spacing (rate r^(b - d(p-1)) = r)
    prof = ap_constant_profile(w, 2, g, BallFamily.dyadic(g, 0, 8, exclude_origin=True))
    assert prof[8] > 10 * prof[4]
    assert all(b > a for a, b in zip(list(prof.values())[3:], list(prof.values())[4:]))
    assert membership_heuristic(w, 2, g) == "out"


def test_rejects_p_le_one():
    with pytest.raises(ValueError):
        ap_constant_estimate(unit_weight(), 1.0, grid(256, 16.0))


def test_estimate_monotone_in_family():
    g = grid(512, 32.0)
    w = power_weight(0.5)
    vals = [ap_constant_estimate(w, 2, g, BallFamily(tuple(range(0, top + 1)))) for top in range(0, 7)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_closed_form_membership():
    assert power_weight(0.5).in_ap(2, 1)
    assert not power_weight(1.0).in_ap(2, 1)
    assert not power_weight(-1.0).in_ap(2, 1)
    assert power_weight(1.5).in_ap(2, 2)


@pytest.mark.parametrize("b,expected", [(0.0, 2.0), (0.5, 4 / 3), (-0.5, 2.0), (0.9, 2 / 1.9)])
def test_regularity_constant_closed_form(b, expected):
    w = unit_weight() if b == 0 else power_weight(b)
    assert regularity_constant(w, 2, 1) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("b", [0.5, -0.5, 0.9])
def test_regularity_constant_bisection_matches_closed_form(b):
    w = power_weight(b)
    bis = regularity_constant(w, 2, 1, method="bisection", grid=grid())
    assert bis == pytest.approx(regularity_constant(w, 2, 1), abs=1e-3)


def test_regularity_constant_bisection_2d():
    g = make_grid(2, 256, 16.0)
    w = power_weight(1.0)
    assert regularity_constant(w, 2, 2, method="bisection", grid=g) == pytest.approx(4 / 3, abs=1e-3)


def test_regularity_constant_rejects_non_member():
    with pytest.raises(ValueError):
        regularity_constant(power_weight(3.0), 2, 1)


def test_membership_heuristic_verdicts():
    g = grid()
    assert membership_heuristic(power_weight(0.5), 2, g) == "in"
    assert membership_heuristic(power_weight(2.0), 2, g) == "out"


def test_order_candidates_near_breakpoint():
    # d = 3, p = 2, b = 1: R = 3*2/4 = 1.5 = d/2 sits on the floor breakpoint
    assert regularity_constant(power_weight(1.0), 2, 3) == pytest.approx(1.5)
    assert order_candidates(power_weight(1.0), 2, 3) == [3, 4]
    assert order_candidates(power_weight(1.0 + 1e-8), 2, 3) == [3, 4]
    assert order_candidates(power_weight(0.5), 2, 1) == [2]


def test_cell_average_closed_form():
    h = 0.1
    assert cell_average_power(0.5, h, 1) == pytest.approx((h / 2) ** 0.5 / 1.5)
    assert cell_average_power(-0.5, h, 1) == pytest.approx((h / 2) ** -0.5 / 0.5)
    assert cell_average_power(-1.0, h, 1) == math.inf


def test_weight_spec_round_trip():
    for spec in ({"kind": "unit"}, {"kind": "power", "b": 0.5},
                 {"kind": "product", "factors": [{"center": [1.0], "b": 0.3}, {"center": [-1.0], "b": 0.2}]}):
        w = weight_from_spec(spec)
        assert weight_from_spec(w.to_spec()) == w


def test_maximal_of_constant():
    g = grid(256, 16.0)
    f = SpectralField.from_values(g, np.ones(g.shape))
    assert np.allclose(maximal_function(f), 1.0)


def test_maximal_of_indicator_at_four():
    g = grid(1024, 32.0)
    x = g.points[0]
    f = SpectralField.from_values(g, (np.abs(x) <= 1).astype(float))
    m = maximal_function(f)
    i = int(np.argmin(np.abs(x - 4.0)))
    assert m[i] == pytest.approx(2 / 5, abs=1e-2)


def test_maximal_dominates_modulus(rng):
    g = grid(256, 16.0)
    for _ in range(50):
        f = band_limited(g, rng)
        assert np.all(maximal_function(f, 32) >= np.abs(f.values) - 1e-15)


def test_sharp_of_constant_is_zero():
    g = grid(256, 16.0)
    f = SpectralField.from_values(g, np.full(g.shape, 3.0))
    assert np.max(np.abs(sharp_function(f))) < 1e-14


def test_sharp_of_sign_at_origin():
    g = grid(1024, 32.0)
    x = g.points[0]
    f = SpectralField.from_values(g, np.sign(x))
    s = sharp_function(f)
    assert s[g.origin_index] == pytest.approx(1.0, abs=1e-2)


def test_double_vs_single_oscillation_on_toy_grid(rng):
    for _ in range(20):
        f = rng.standard_normal(8)
        for k in range(1, 9):
            single = window_oscillations(f, k)
            for start in range(8):
                w = f[(start + np.arange(k)) % 8]
                brute_single = np.mean(np.abs(w - w.mean()))
                brute_double = np.mean([abs(a - b) for a in w for b in w])
                assert single[start] == pytest.approx(brute_single, abs=1e-12)
                dbl = window_double_oscillation(f, start, k)
                assert dbl == pytest.approx(brute_double, abs=1e-12)
                assert single[start] <= dbl + 1e-12 <= 2 * single[start] + 2e-12
