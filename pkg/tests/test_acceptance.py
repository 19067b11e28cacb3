"""Acceptance criteria 1-12; each test records one PASS/FAIL line."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from psido_ivp.cli import cli_main
from psido_ivp.kernels import TimeBump, kernel_bound_report, solve_homogeneous, weak_residual
from psido_ivp.littlewood_paley import (
    NormSpec,
    classical_bessel_norm,
    lift,
    make_frame,
    project,
    space_norm,
    square_function,
)
from psido_ivp.spectral_core import SpectralField, make_grid, weighted_lp_norm
from psido_ivp.symbols import builtin_symbol
from psido_ivp.time_measures import (
    DyadicSequence,
    TimeMeasure,
    control_sequence,
    laplace,
    power_density,
    power_measure,
    power_sum_density,
)
from psido_ivp.verify import initial_data, scenario_from_dict, verify_estimate
from psido_ivp.weights import maximal_function, power_weight, sharp_function, unit_weight

from conftest import band_limited, smooth_random

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"
HEAT = builtin_symbol("fractional_laplacian", {"gamma": 2.0})
REFINEMENT = (256, 512, 1024)


def delta_like(grid):
    return SpectralField.from_spectrum(grid, np.full(grid.shape, (2 * math.pi) ** -0.5, dtype=complex))


def test_01_heat_kernel_oracle(record_acceptance):
    grid = make_grid(1, 1024, 32.0)
    u = solve_homogeneous(HEAT, delta_like(grid), [1.0]).states[0].values.real
    x = grid.points[0]
    near = np.abs(x) <= 8
    exact = (4 * math.pi) ** -0.5 * np.exp(-x[near] ** 2 / 4)
    err = float(np.max(np.abs(u[near] - exact) / exact))
    assert record_acceptance(1, err <= 1e-6, f"heat kernel max rel. error on |x| <= 8: {err:.3e} (tol 1e-6)")


def test_02_poisson_kernel_oracle(record_acceptance):
    grid = make_grid(1, 1024, 64.0)
    poisson = builtin_symbol("fractional_laplacian", {"gamma": 1.0})
    u = solve_homogeneous(poisson, delta_like(grid), [1.0]).states[0]
    val = float(u.values.real[grid.origin_index])
    err = abs(val - 1 / math.pi) * math.pi
    # the periodic lattice solution is the periodized kernel: excess ~ (pi^2 / 3) / (2L)^2
    periodized = sum(1 / (1 + (2 * 64.0 * n) ** 2) for n in range(-2000, 2001)) / math.pi
    detail = (f"Poisson value at 0: {val:.9f}, rel. error {err:.3e} (tol 1e-4); "
              f"periodized-kernel value {periodized:.9f}")
    assert record_acceptance(2, err <= 1e-4, detail)


def test_03_partition_and_orthogonality(record_acceptance):
    worst_pu, worst_orth = 0.0, 0.0
    rng = np.random.default_rng(3)
    for n, L in [(1024, 32.0), (256, 16.0), (512, 8 * math.pi), (1024, 2.0)]:
        grid = make_grid(1, n, L)
        fr = make_frame(grid)
        lo, hi = fr.ladder
        total = sum(fr.block(j) for j in range(lo, hi + 1))
        mask = fr.resolved_mask()
        worst_pu = max(worst_pu, float(np.max(np.abs(total[mask] - 1))))
        for j in range(lo, hi + 1):
            tele = sum(fr.block(i) for i in range(lo, j + 1))
            worst_pu = max(worst_pu, float(np.max(np.abs(tele - (fr.cutoff(j) - fr.cutoff(lo - 1))))))
        f = band_limited(grid, rng, k_max=n // 2 - 1)
        nf = weighted_lp_norm(f, 2.0)
        for i in range(lo, hi + 1):
            for j in range(lo, hi + 1):
                if abs(i - j) >= 2:
                    worst_orth = max(worst_orth, weighted_lp_norm(project(fr, project(fr, f, j), i), 2.0) / nf)
    ok = worst_pu <= 1e-12 and worst_orth <= 1e-14
    assert record_acceptance(3, ok, f"partition/telescoping deviation {worst_pu:.2e} (tol 1e-12), "
                                    f"Delta_i Delta_j residual {worst_orth:.2e} (tol 1e-14)")


def test_04_laplace_and_two_branch(record_acceptance):
    worst = 0.0
    for a in (0.0, 0.5, 2.0):
        for k in range(-6, 7):
            lam = 2.0**k
            exact = math.gamma(a + 1) * lam ** (-(a + 1))
            worst = max(worst, abs(laplace(power_measure(a), lam) / exact - 1))
    gamma, a = 2.0, 0.5
    seq = control_sequence(TimeMeasure(power_sum_density([0.0, 1.0])), gamma, a, (-10, 10)).sequence
    d_hi = seq(9) - seq(8)
    d_lo = seq(-8) - seq(-9)
    # large j sees the small-time branch t^0, small j the large-time branch t^1
    e_hi, e_lo = abs(d_hi - gamma * (a + 0 + 1)), abs(d_lo - gamma * (a + 1 + 1))
    ok = worst <= 1e-8 and e_hi <= 0.02 and e_lo <= 0.02
    assert record_acceptance(4, ok, f"Laplace closed-form rel. error {worst:.2e} (tol 1e-8); "
                                    f"two-branch differences {d_hi:.4f} at j=+8 (target {gamma * (a + 1):g}), "
                                    f"{d_lo:.4f} at j=-8 (target {gamma * (a + 2):g}), tol 0.02")


def test_05_smoothing_exponent(record_acceptance):
    sc = scenario_from_dict(json.loads((CONFIGS / "power_case_blocks.json").read_text()))
    rep = verify_estimate(sc, workers=4)
    s = rep.summary["slope_diagnostics"]["smoothing_exponent"]
    ok = abs(s - 1.5) <= 0.05 and all(math.isfinite(r["ratio"]) for r in rep.rows)
    assert record_acceptance(5, ok, f"recovered smoothing exponent {s:.4f} (target 1.5, tol 0.05)")


def test_06_second_order_stability(record_acceptance):
    spreads = {}
    for b in (0.0, 0.5):
        for a in (0.0, 0.5):
            ratios = []
            for n in REFINEMENT:
                doc = {"kind": "second_order", "symbol": {"kind": "second_order", "pieces": [1, 3], "step": 0.125},
                       "weight": {"kind": "power", "b": b}, "a": a, "p": 2,
                       "grid": {"points": n, "half_width": 16}, "horizon": 1.0,
                       "data": {"kind": "dilation", "base_width": 1.0, "lambdas": [1, 2, 4]}}
                rep = verify_estimate(scenario_from_dict(doc), workers=4)
                ratios += [r["ratio"] for r in rep.rows]
            spreads[(b, a)] = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    worst = max(spreads.values())
    cells = ", ".join(f"b={b:g},a={a:g}: x{v:.3f}" for (b, a), v in spreads.items())
    assert record_acceptance(6, worst <= 2.0, f"ratio variation over N and lambda per (w, a): {cells} (tol x2)")


def test_07_kernel_bound_sweep(record_acceptance):
    cfg = json.loads((CONFIGS / "heat_sweep.json").read_text())
    grid = make_grid(1, cfg["grid"]["points"], cfg["grid"]["half_width"])
    rep = kernel_bound_report(HEAT, cfg["sweep"], grid, workers=4)
    spread = max(c["spread"] for c in rep["cells_tau"].values())
    excess = max(c["max_excess_log2"] for c in rep["cells_tau"].values())
    slope = max(c["slope"] for c in rep["s0_cells"].values())
    ok = spread <= 1.0 and excess <= 1.0 and slope <= 0.01
    assert record_acceptance(7, ok, f"worst log2 N_hat spread {spread:.3f} (tol 1.0), worst row excess "
                                    f"x{2 ** excess:.3f} (tol x2), worst S0 slope {slope:.3g} (tol 0.01)")


def _maximal_ratios(n, w, count=50):
    grid = make_grid(1, n, 32.0)
    rng = np.random.default_rng(2024)
    hl, fs = [], []
    for _ in range(count):
        f = smooth_random(grid, rng)
        nf = weighted_lp_norm(f, 2.0, w)
        hl.append(weighted_lp_norm(SpectralField.from_values(grid, maximal_function(f)), 2.0, w) / nf)
        fs.append(nf / weighted_lp_norm(SpectralField.from_values(grid, sharp_function(f)), 2.0, w))
    return np.array(hl), np.array(fs)


def test_08_maximal_inequalities(record_acceptance):
    ok = True
    parts = []
    for b in (0.0, 0.5):
        w = power_weight(b)
        runs = {n: _maximal_ratios(n, w) for n in REFINEMENT}
        for idx, name in ((0, "HL"), (1, "FS")):
            c = float(runs[REFINEMENT[0]][idx].max())
            drift = max(abs(runs[n][idx].max() / c - 1) for n in REFINEMENT)
            worst = max(float(runs[n][idx].max()) / c for n in REFINEMENT)
            ok &= drift <= 0.2 and worst <= 1.05
            parts.append(f"{name} b={b:g}: C={c:.4f}, drift {100 * drift:.2f}%, worst/C {worst:.4f}")
    assert record_acceptance(8, ok, "; ".join(parts) + " (tol 20%, 1.05)")


def _equivalence_windows(n, p, w, count=50):
    grid = make_grid(1, n, 32.0)
    fr = make_frame(grid)
    lo, hi = fr.ladder
    s = 1.0
    r = DyadicSequence.linear(s, lo, hi)
    norm_r = NormSpec(p, 2.0, r, w)
    rng = np.random.default_rng(77)
    sq, li, cl = [], [], []
    for _ in range(count):
        f = smooth_random(grid, rng, scale=6.0)
        nf = weighted_lp_norm(f, p, w)
        sq.append(weighted_lp_norm(SpectralField.from_values(grid, square_function(fr, f)), p, w) / nf)
        hr = space_norm(f, norm_r, fr)
        li.append(weighted_lp_norm(lift(fr, f, r, homogeneous=False), p, w) / hr)
        cl.append(classical_bessel_norm(f, s, p, w) / hr)
    return {k: (float(min(v)), float(max(v))) for k, v in (("square", sq), ("lift", li), ("classical", cl))}


def test_09_equivalence_windows(record_acceptance):
    ok = True
    parts = []
    for p, w, label in ((2.0, unit_weight(), "p=2,w=1"), (2.0, power_weight(0.5), "p=2,w=|x|^0.5"),
                        (3.0, unit_weight(), "p=3,w=1")):
        wins = {n: _equivalence_windows(n, p, w) for n in REFINEMENT}
        base = wins[REFINEMENT[0]]
        for name in ("square", "lift", "classical"):
            drift = max(abs(wins[n][name][i] / base[name][i] - 1) for n in REFINEMENT for i in (0, 1))
            ok &= drift <= 0.2
            lo_, hi_ = base[name]
            parts.append(f"{label} {name} [{lo_:.3f}, {hi_:.3f}] drift {100 * drift:.2f}%")
        if label == "p=2,w=1":
            lo_ = min(wins[n]["square"][0] for n in REFINEMENT)
            hi_ = max(wins[n]["square"][1] for n in REFINEMENT)
            inside = lo_ >= 0.9 / math.sqrt(3) and hi_ <= 1.1 * math.sqrt(3)
            ok &= inside
    assert record_acceptance(9, ok, "; ".join(parts))


def test_10_weak_residual(record_acceptance):
    grid = make_grid(1, 256, 16.0)
    times = np.linspace(0.0, 1.0, 128)
    u0 = SpectralField.from_values(grid, np.exp(-0.5 * grid.points[0] ** 2))
    traj = solve_homogeneous(HEAT, u0, times)
    phi = SpectralField.from_values(grid, np.cos(2 * grid.freq_step * grid.points[0]))
    bump = TimeBump(0.05, 0.95)
    res = weak_residual(HEAT, traj, bump, phi)["residual"]
    bad = weak_residual(HEAT, traj.scaled_states(lambda t: 1.01 if t >= 0.5 else 1.0), bump, phi)["residual"]
    ok = res <= 1e-5 and bad >= 1e-3
    assert record_acceptance(10, ok, f"weak residual {res:.3e} (tol 1e-5); corrupted {bad:.3e} (needs >= 1e-3)")


def test_11_dirac_measure(record_acceptance):
    t0, a = 0.25, 1.0
    doc = {"kind": "power_case", "symbol": {"kind": "fractional_laplacian", "gamma": 2}, "a": a, "p": 2, "q": 2,
           "measure": {"atoms": [[t0, 1.0]]}, "grid": {"points": 1024, "half_width": 16}, "horizon": 1.0,
           "data": {"kind": "single_block", "levels": [2, 3, 4, 5]}}
    sc = scenario_from_dict(doc)
    rep = verify_estimate(sc, workers=4)
    frame = make_frame(sc.grid)
    norm = NormSpec(2.0, 2.0, DyadicSequence.linear(2.0, *frame.ladder))
    worst = 0.0
    for (_, u0, _), row in zip(initial_data(sc, frame), rep.rows):
        u = solve_homogeneous(sc.symbol, u0, [t0]).states[0]
        direct = math.sqrt(t0**a * space_norm(u, norm, frame) ** 2)
        worst = max(worst, abs(row["lhs"] / direct - 1))
    finite = all(math.isfinite(r["ratio"]) and r["ratio"] > 0 for r in rep.rows)
    ratios = ", ".join(f"{r['ratio']:.3g}" for r in rep.rows)
    assert record_acceptance(11, worst <= 1e-10 and finite,
                             f"atom LHS vs direct evaluation rel. error {worst:.2e} (tol 1e-10); ratios {ratios}")


def _cli_bytes(tmp_path, command, config, workers, tag):
    out = tmp_path / f"{command}-{tag}-{workers}"
    code = cli_main([command, "--config", str(config), "--out", str(out), "--workers", str(workers)])
    return code, (out / "report.json").read_bytes() + (out / "table.csv").read_bytes()


def test_12_determinism(tmp_path, record_acceptance, capsys):
    multi = tmp_path / "multi.json"
    multi.write_text(json.dumps({"scenarios": [
        json.loads((CONFIGS / "second_order.json").read_text()),
        {"name": "random_heat", "kind": "homogeneous_bessel", "symbol": {"kind": "fractional_laplacian", "gamma": 2},
         "a": 0.5, "grid": {"points": 256, "half_width": 16}, "data": {"kind": "random", "seed": 9, "count": 6}},
    ]}))
    jobs = [("verify", multi), ("kernel-bounds", CONFIGS / "heat_sweep.json"), ("weak-residual", CONFIGS / "weak_heat.json")]
    ok = True
    parts = []
    for command, config in jobs:
        blobs = [_cli_bytes(tmp_path, command, config, w, "a")[1] for w in (1, 4, 8)]
        blobs.append(_cli_bytes(tmp_path, command, config, 4, "b")[1])
        same = all(b == blobs[0] for b in blobs)
        ok &= same
        parts.append(f"{command}: {'identical' if same else 'DIFFERENT'}")
    capsys.readouterr()
    assert record_acceptance(12, ok, "reports under 1/4/8 workers and a repeat run: " + ", ".join(parts))
