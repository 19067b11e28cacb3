"""Scenario-driven checks of the a-priori estimates.

A scenario fixes a symbol, a spatial weight, a time measure, exponents,
a smoothness sequence, a grid, a horizon, an initial-data family and an
estimate kind.  :func:`verify_estimate` solves exactly in spectrum at the
nodes of a graded time rule, evaluates both sides of the chosen estimate
per datum, and reports the ratios (the empirical implied constant).

Estimate kinds
--------------
``homogeneous_bessel``
    ``int ||u||^q_{H^r_p(w)} t^a mu(c dt) <= N (1 + mu_{a,T}) ||u0||^q_{B^{r - mu/q}_{p,q}(w)}``
    with ``c = min(1, q) kappa / 16^gamma``.
``gradient``
    ``int || |psi u| + |Delta^{gamma/2} u| ||^q_{H^{r-gamma}_p(w)} t^a mu(c dt) <= N ||u0||^q_{Bdot^{r - mu/q}}``.
``power_case``
    unscaled measure, ``r = gamma j``, both sides to the power ``1/q``:
    ``(int ||u||^q_{H^gamma_p} t^a mu(dt))^{1/q} <= N (1 + mu_{a,T}^{1/q}) ||u0||_{B^{gamma - mu/q}}``.
``second_order``
    ``int ||u||^P_{H^{2(a+1)/P}_p(w)} t^a dt <= N int |u0|^p w dx`` with ``P = max(p, 2)``.
``inhomogeneous``
    ``int ||u||^q_{H^r_p} w'(t) dt <= N (1+T)^q (||u0||^q_{B^{r - w'/q}} + int ||f||^q_{H^{r-gamma}_p} w'(t) dt)``
    with ``w'(j) = -log2 int_0^{2^{-j gamma}} w'(t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import _integral_on_grid, _map, _piece_table, solve_inhomogeneous
from .littlewood_paley import LPFrame, NormSpec, make_frame, smoothness_from_spec, space_norm
from .spectral_core import SpectralField, SpectralGrid, make_grid, weighted_lp_norm
from .symbols import Symbol, check_ellipticity, symbol_from_spec
from .time_measures import (
    DyadicSequence,
    TimeMeasure,
    control_sequence,
    measure_from_spec,
    power_measure,
    time_quadrature,
)
from .weights import Weight, weight_from_spec

__all__ = [
    "ESTIMATE_KINDS",
    "Scenario",
    "EstimateReport",
    "EstimateViolation",
    "scenario_from_dict",
    "initial_data",
    "verify_estimate",
    "verify_inhomogeneous",
    "measure_scale",
]

ESTIMATE_KINDS = ("homogeneous_bessel", "gradient", "power_case", "second_order", "inhomogeneous")
_REFINE_LEVELS = (1, 2, 4, 8)
_CONVERGENCE_TOL = 0.01


class EstimateViolation(RuntimeError):
    """Right-hand side vanishes while the left-hand side does not."""


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    kind: str
    symbol: Symbol
    weight: Weight
    measure: TimeMeasure
    a: float
    p: float
    q: float
    smoothness: dict | None
    grid: SpectralGrid
    horizon: float
    data: dict
    forcing: dict = field(default_factory=lambda: {"kind": "zero"})
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ESTIMATE_KINDS:
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.kind == "second_order":
            if not self.a > -1:
                raise ValueError("second_order needs a > -1")
            if self.symbol.spec.get("kind") != "second_order":
                raise ValueError("second_order scenarios need a second_order symbol")
        elif self.kind != "inhomogeneous" and not self.a > 0:
            raise ValueError(f"{self.kind} needs a > 0")


def scenario_from_dict(d: dict) -> Scenario:
    g = d["grid"]
    grid = make_grid(int(g.get("dim", 1)), int(g["points"]), float(g["half_width"]))
    measure = measure_from_spec(d.get("measure", {"density": {"kind": "lebesgue"}}))
    return Scenario(
        name=str(d.get("name", d["kind"])),
        kind=d["kind"],
        symbol=symbol_from_spec(d["symbol"]),
        weight=weight_from_spec(d.get("weight")),
        measure=measure,
        a=float(d.get("a", 0.0)),
        p=float(d.get("p", 2.0)),
        q=float(d.get("q", d.get("p", 2.0))),
        smoothness=d.get("smoothness"),
        grid=grid,
        horizon=float(d.get("horizon", 1.0)),
        data=dict(d.get("data", {"kind": "gaussian", "widths": [1.0]})),
        forcing=dict(d.get("forcing", {"kind": "zero"})),
        workers=int(d.get("workers", 1)),
    )


# ---------------------------------------------------------------------------
# data families


def _gaussian(grid: SpectralGrid, width: float, lam: float = 1.0) -> SpectralField:
    r = grid.abs_position * lam
    return SpectralField.from_values(grid, np.exp(-0.5 * (r / width) ** 2))


def initial_data(scenario: Scenario, frame: LPFrame) -> list[tuple[str, SpectralField, dict]]:
    """``(datum_id, u0, extra)`` triples for the scenario's data family."""
    grid = scenario.grid
    spec = scenario.data
    kind = spec.get("kind", "gaussian")
    out = []
    if kind == "gaussian":
        for w in spec.get("widths", [1.0]):
            out.append((f"gaussian:w={w:g}", _gaussian(grid, float(w)), {}))
    elif kind == "dilation":
        w = float(spec.get("base_width", 1.0))
        for lam in spec.get("lambdas", [1.0, 2.0, 4.0]):
            out.append((f"dilation:lambda={lam:g}", _gaussian(grid, w, float(lam)), {"lambda": float(lam)}))
    elif kind == "single_block":
        for level in spec.get("levels", [2, 3, 4, 5]):
            u = SpectralField.from_spectrum(grid, frame.block(int(level)).astype(complex))
            u = SpectralField.from_values(grid, u.values.real)
            u = u * (1.0 / weighted_lp_norm(u, scenario.p, scenario.weight))
            out.append((f"block:J={level}", u, {"level": int(level)}))
    elif kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        cut = frame.cutoff(int(spec.get("max_level", frame.band[1] - 1)))
        for i in range(int(spec.get("count", 4))):
            noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
            u = SpectralField.from_spectrum(grid, noise * cut)
            out.append((f"random:{i}", SpectralField.from_values(grid, u.values.real), {}))
    elif kind == "zero":
        out.append(("zero", SpectralField.from_values(grid, np.zeros(grid.shape)), {}))
    else:
        raise ValueError(f"unknown data kind {kind!r}")
    return out


def _forcing_spectrum(scenario: Scenario) -> np.ndarray | None:
    spec = scenario.forcing
    kind = spec.get("kind", "zero")
    grid = scenario.grid
    if kind == "zero":
        return None
    if kind == "mode":
        k = int(spec["index"])
        amp = float(spec.get("amplitude", 1.0))
        x = grid.points[0]
        vals = amp * np.cos(grid.freq_step * k * x)
        return SpectralField.from_values(grid, vals).spectrum
    raise ValueError(f"unknown forcing kind {kind!r}")


# ---------------------------------------------------------------------------
# reports


@dataclass
class EstimateReport:
    scenario: str
    kind: str
    rows: list
    summary: dict
    details: dict = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return self.summary["max_ratio"]

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "kind": self.kind, "rows": self.rows, "summary": self.summary,
                "details": self.details}


def measure_scale(scenario: Scenario) -> float:
    """Time-dilation constant applied to the measure for each kind."""
    if scenario.kind in ("homogeneous_bessel", "gradient"):
        return min(1.0, scenario.q) * scenario.symbol.kappa_effective / 16.0**scenario.symbol.gamma
    return 1.0


def _lhs_setup(scenario: Scenario) -> tuple[TimeMeasure, float, float, dict]:
    """Measure, time exponent, scale and metadata for the left-hand time integral."""
    if scenario.kind == "second_order":
        a = scenario.a
        a0 = a if a > 0 else 0.5 * (a + 1.0)
        return power_measure(a - a0), a0, 1.0, {"a0": a0, "measure_exponent": a - a0}
    if scenario.kind == "inhomogeneous":
        return scenario.measure, 0.0, 1.0, {}
    return scenario.measure, scenario.a, measure_scale(scenario), {}


def _space_spec(scenario: Scenario, frame: LPFrame) -> tuple[NormSpec, float]:
    """Norm used inside the time integral and the power it is raised to."""
    lo, hi = frame.ladder
    gamma = scenario.symbol.gamma
    if scenario.kind == "second_order":
        P = max(scenario.p, 2.0)
        r = DyadicSequence.linear(2.0 * (scenario.a + 1.0) / P, lo, hi)
        return NormSpec(scenario.p, 2.0, r, scenario.weight, "bessel", False), P
    if scenario.kind == "power_case":
        r = DyadicSequence.linear(gamma, lo, hi)
    else:
        r = smoothness_from_spec(scenario.smoothness or {"kind": "linear", "slope": gamma}, lo, hi)
    if scenario.kind == "gradient":
        r = r - DyadicSequence.linear(gamma, lo, hi)
    return NormSpec(scenario.p, 2.0, r, scenario.weight, "bessel", False), scenario.q


def _data_smoothness(scenario: Scenario, frame: LPFrame) -> tuple[DyadicSequence, dict]:
    lo, hi = frame.ladder
    gamma = scenario.symbol.gamma
    if scenario.kind == "power_case":
        r = DyadicSequence.linear(gamma, lo, hi)
    else:
        r = smoothness_from_spec(scenario.smoothness or {"kind": "linear", "slope": gamma}, lo, hi)
    if scenario.kind == "inhomogeneous":
        vals = []
        for j in range(lo, hi + 1):
            m = scenario.measure.mass(0.0, 2.0 ** (-j * gamma))
            if not m > 0:
                raise ValueError(f"measure gives no mass to (0, 2^{-j * gamma:g})")
            vals.append(-math.log2(m))
        shift = DyadicSequence(lo, hi, np.array(vals))
    else:
        shift = control_sequence(scenario.measure, gamma, scenario.a, (lo, hi)).sequence
    return r - shift * (1.0 / scenario.q), {"shift": shift.values.tolist(), "shift_j_lo": lo}


def _time_integral(nodes_fn: Callable[[int], tuple], g: Callable[[np.ndarray], np.ndarray]) -> tuple[float, int, bool]:
    """Integrate with the pre-flight doubling; returns value, node count, converged."""
    prev = None
    n_nodes = 0
    for refine in _REFINE_LEVELS:
        nodes, weights = nodes_fn(refine)
        n_nodes = nodes.size
        val = float(np.sum(weights * g(nodes))) if nodes.size else 0.0
        if prev is not None:
            scale = max(abs(val), abs(prev))
            if scale == 0 or abs(val - prev) < _CONVERGENCE_TOL * scale:
                return val, n_nodes, True
        prev = val
    return prev, n_nodes, False


def _evolve(symbol: Symbol, grid: SpectralGrid, table, spec0: np.ndarray, t: float) -> np.ndarray:
    return np.exp(_integral_on_grid(symbol, 0.0, t, grid, table)) * spec0


def _pointwise_norms(scenario: Scenario, frame: LPFrame, norm: NormSpec, table, u0: SpectralField,
                     forcing_spec: np.ndarray | None, nodes: np.ndarray) -> tuple[np.ndarray, dict]:
    grid = scenario.grid
    sym = scenario.symbol
    gamma = sym.gamma
    out = np.empty(nodes.size)
    psi_over_lap = 0.0
    duhamel = None
    if forcing_spec is not None:
        traj = solve_inhomogeneous(sym, lambda s: forcing_spec, nodes, grid, force=True)
        duhamel = [st.spectrum for st in traj.states]
    for i, t in enumerate(nodes):
        spec = _evolve(sym, grid, table, u0.spectrum, float(t))
        if duhamel is not None:
            spec = spec + duhamel[i]
        if scenario.kind == "gradient":
            psi_u = SpectralField.from_spectrum(grid, sym.on_grid(float(t), grid) * spec).values
            lap_u = SpectralField.from_spectrum(grid, -grid.abs_frequency**gamma * spec).values
            h = SpectralField.from_values(grid, np.abs(psi_u) + np.abs(lap_u))
            lp = weighted_lp_norm(SpectralField.from_values(grid, lap_u), scenario.p, scenario.weight)
            if lp > 0:
                pp = weighted_lp_norm(SpectralField.from_values(grid, psi_u), scenario.p, scenario.weight)
                psi_over_lap = max(psi_over_lap, pp / lp)
            out[i] = space_norm(h, norm, frame)
        else:
            out[i] = space_norm(SpectralField.from_spectrum(grid, spec), norm, frame)
    return out, {"psi_over_laplacian_max": psi_over_lap} if scenario.kind == "gradient" else {}


def _one_datum(scenario: Scenario, frame: LPFrame, table, item, forcing_spec) -> dict:
    datum_id, u0, extra = item
    grid = scenario.grid
    measure, a_eff, c, _ = _lhs_setup(scenario)
    norm, power = _space_spec(scenario, frame)
    T = scenario.horizon
    data_r, _ = _data_smoothness(scenario, frame)
    diag: dict = {}

    def nodes_fn(refine):
        return time_quadrature(measure, a_eff, c, T, refine=refine)

    def g(nodes):
        vals, d = _pointwise_norms(scenario, frame, norm, table, u0, forcing_spec, nodes)
        diag.update(d)
        return vals**power

    lhs, n_nodes, converged = _time_integral(nodes_fn, g)
    flags = [] if converged else ["time_unconverged"]

    mu_aT = float(np.sum(time_quadrature(measure, a_eff, c, T)[1]))
    if scenario.kind == "second_order":
        rhs = weighted_lp_norm(u0, scenario.p, scenario.weight) ** scenario.p
    elif scenario.kind == "gradient":
        rhs = space_norm(u0, NormSpec(scenario.p, scenario.q, data_r, scenario.weight, "besov", True), frame) ** scenario.q
    else:
        b = space_norm(u0, NormSpec(scenario.p, scenario.q, data_r, scenario.weight, "besov", False), frame)
        if scenario.kind == "power_case":
            lhs = lhs ** (1.0 / scenario.q)
            rhs = (1.0 + mu_aT ** (1.0 / scenario.q)) * b
        elif scenario.kind == "homogeneous_bessel":
            rhs = (1.0 + mu_aT) * b**scenario.q
        else:
            f_part = 0.0
            if forcing_spec is not None:
                lo, hi = frame.ladder
                r = smoothness_from_spec(scenario.smoothness or {"kind": "linear", "slope": scenario.symbol.gamma}, lo, hi)
                f_norm = space_norm(SpectralField.from_spectrum(grid, forcing_spec),
                                    NormSpec(scenario.p, 2.0, r - DyadicSequence.linear(scenario.symbol.gamma, lo, hi),
                                             scenario.weight, "bessel", False), frame)
                f_part = f_norm**scenario.q * mu_aT
            rhs = (1.0 + T) ** scenario.q * (b**scenario.q + f_part)
    if rhs == 0:
        if lhs > 0:
            raise EstimateViolation(f"{scenario.name}/{datum_id}: RHS = 0 but LHS = {lhs:.6g}")
        ratio = 0.0
        flags.append("rhs_zero")
    else:
        ratio = lhs / rhs
    row = {"datum_id": datum_id, "lhs": float(lhs), "rhs": float(rhs), "ratio": float(ratio),
           "flags": ";".join(flags), "time_nodes": n_nodes, **extra, **diag}
    return row


def _slope_diagnostics(scenario: Scenario, rows: list, frame: LPFrame) -> dict:
    out = {}
    power = 1.0 if scenario.kind == "power_case" else (
        max(scenario.p, 2.0) if scenario.kind == "second_order" else scenario.q)
    blocks = [r for r in rows if "level" in r and r["lhs"] > 0 and r["rhs"] > 0]
    if len(blocks) >= 2:
        J = np.array([r["level"] for r in blocks], dtype=float)
        lhs = np.log2([r["lhs"] ** (1.0 / power) for r in blocks])
        rhs_pow = 1.0 if scenario.kind in ("power_case", "second_order") else scenario.q
        rhs = np.log2([r["rhs"] ** (1.0 / rhs_pow) for r in blocks])
        lhs_slope = float(np.polyfit(J, lhs, 1)[0])
        rhs_slope = float(np.polyfit(J, rhs, 1)[0])
        out.update(lhs_slope=lhs_slope, rhs_slope=rhs_slope)
        lo, hi = frame.ladder
        norm, _ = _space_spec(scenario, frame)
        r = norm.smoothness.values
        if np.allclose(np.diff(r), r[1] - r[0]) if r.size > 1 else False:
            out["smoothing_exponent"] = float(r[1] - r[0]) - lhs_slope
    dil = [r for r in rows if "lambda" in r and r["ratio"] > 0]
    if len(dil) >= 2:
        lam = np.log2([r["lambda"] for r in dil])
        out["ratio_slope_vs_log2_lambda"] = float(np.polyfit(lam, np.log2([r["ratio"] for r in dil]), 1)[0])
    return out


def verify_estimate(scenario: Scenario, workers: int | None = None) -> EstimateReport:
    """Evaluate both sides of the scenario's estimate for every datum."""
    workers = scenario.workers if workers is None else workers
    sym = scenario.symbol
    rep = check_ellipticity(sym, scenario.grid)
    if not rep.verdicts["elliptic"]:
        raise ValueError(f"symbol {sym.name} is not elliptic (min ratio {rep.min_ellipticity_ratio:.6g})")
    frame = make_frame(scenario.grid)
    table = _piece_table(sym, scenario.grid)
    forcing_spec = _forcing_spectrum(scenario) if scenario.kind == "inhomogeneous" else None
    items = initial_data(scenario, frame)
    rows = _map(lambda it: _one_datum(scenario, frame, table, it, forcing_spec), items, workers)
    measure, a_eff, c, meta = _lhs_setup(scenario)
    mu_aT = float(np.sum(time_quadrature(measure, a_eff, c, scenario.horizon)[1]))
    finite = [r["ratio"] for r in rows if math.isfinite(r["ratio"])]
    max_ratio = max(finite) if finite else math.nan
    soft = any(r["flags"] for r in rows)
    verdict = "fail" if not finite or len(finite) < len(rows) else ("flagged" if soft else "pass")
    summary = {"max_ratio": max_ratio, "mu_aT": mu_aT, "slope_diagnostics": _slope_diagnostics(scenario, rows, frame),
               "verdict": verdict}
    _, shift_meta = _data_smoothness(scenario, frame)
    details = {"measure_scale": c, "time_exponent": a_eff, "grid": scenario.grid.to_dict(), **meta, **shift_meta}
    return EstimateReport(scenario.name, scenario.kind, rows, summary, details)


def verify_inhomogeneous(scenario: Scenario, workers: int | None = None) -> EstimateReport:
    """Forced problem with data: ``u = u1 + u2`` (homogeneous plus Duhamel part)."""
    if scenario.kind != "inhomogeneous":
        raise ValueError("verify_inhomogeneous needs kind 'inhomogeneous'")
    return verify_estimate(scenario, workers)
