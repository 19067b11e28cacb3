"""Command-line front end: ``psido-ivp <subcommand> --config cfg.json --out DIR``.

Each subcommand writes ``DIR/report.json`` and ``DIR/table.csv`` and prints
one summary line per scenario.  Exit status: 0 when every verdict passes,
2 when only soft flags are present, 1 on a hard violation or bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .kernels import TimeBump, kernel_bound_report, solve_homogeneous, solve_inhomogeneous, weak_residual
from .littlewood_paley import make_frame, norm_spec_from_dict, space_norm_details
from .spectral_core import SpectralField, make_grid, read_field, weighted_lp_norm, write_field
from .symbols import check_ellipticity, check_regular_upper_bound, required_order, symbol_from_spec
from .time_measures import (
    control_sequence,
    doubling_constant,
    log_laplace,
    measure_from_spec,
    weak_scaling_constants,
)
from .verify import EstimateViolation, scenario_from_dict, verify_estimate
from .weights import BallFamily, ap_constant_profile, membership_heuristic, regularity_constant, weight_from_spec

EXIT_PASS, EXIT_HARD, EXIT_SOFT = 0, 1, 2

# ---------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_GRID = {
    "type": "object",
    "required": ["points", "half_width"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1, "maximum": 3},
        "points": {"type": "integer", "minimum": 8},
        "half_width": {"type": "number", "exclusiveMinimum": 0},
    },
}
_SYMBOL = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["fractional_laplacian", "second_order", "relativistic", "oscillating_complex",
                          "scaled_power"]},
        "gamma": _NUM,
        "kappa": _NUM,
        "M": _NUM,
        "pieces": {"type": "array"},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "time_partition": {"type": "array", "items": _NUM},
        "periodic": {"type": "boolean"},
    },
}
_WEIGHT = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["unit", "power", "product"]},
        "b": _NUM,
        "factors": {"type": "array"},
    },
}
_MEASURE = {
    "type": "object",
    "properties": {
        "density": {
            "type": ["object", "null"],
            "required": ["kind"],
            "properties": {"kind": {"enum": ["power", "lebesgue", "power_sum", "ainfty_blocks"]}},
        },
        "atoms": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
}
_FIELD = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "file", "flat"]},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "path": {"type": "string"},
    },
}
_SCENARIO = {
    "type": "object",
    "required": ["kind", "symbol", "grid"],
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": ["homogeneous_bessel", "gradient", "power_case", "second_order", "inhomogeneous"]},
        "symbol": _SYMBOL,
        "weight": _WEIGHT,
        "measure": _MEASURE,
        "a": _NUM,
        "p": {"type": "number", "exclusiveMinimum": 1},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "smoothness": {"type": "object"},
        "grid": _GRID,
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "data": {"type": "object", "required": ["kind"],
                 "properties": {"kind": {"enum": ["gaussian", "dilation", "single_block", "random", "zero"]}}},
        "forcing": {"type": "object", "properties": {"kind": {"enum": ["zero", "mode"]}}},
        "workers": {"type": "integer", "minimum": 1},
    },
}

SCHEMAS = {
    "check-symbol": {
        "type": "object",
        "required": ["symbol", "grid"],
        "properties": {"symbol": _SYMBOL, "grid": _GRID, "order": {"type": "integer", "minimum": 0, "maximum": 4},
                       "weight": _WEIGHT, "p": {"type": "number", "exclusiveMinimum": 1},
                       "horizon": {"type": "number", "exclusiveMinimum": 0}},
    },
    "ap-constant": {
        "type": "object",
        "required": ["weight", "p", "grid"],
        "properties": {"weight": _WEIGHT, "p": {"type": "number", "exclusiveMinimum": 1}, "grid": _GRID,
                       "levels": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                       "exclude_origin": {"type": "boolean"}},
    },
    "lp-norm": {
        "type": "object",
        "required": ["grid", "field", "norm"],
        "properties": {"grid": _GRID, "field": _FIELD,
                       "norm": {"type": "object", "required": ["p"],
                                "properties": {"p": {"type": "number", "minimum": 1},
                                               "q": {"type": "number", "exclusiveMinimum": 0},
                                               "flavor": {"enum": ["bessel", "besov"]},
                                               "homogeneous": {"type": "boolean"}, "r": {"type": "object"},
                                               "weight": _WEIGHT}}},
    },
    "laplace": {
        "type": "object",
        "required": ["measure", "lambdas"],
        "properties": {"measure": _MEASURE,
                       "lambdas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}},
    },
    "control-seq": {
        "type": "object",
        "required": ["measure", "gamma", "a", "j_range"],
        "properties": {"measure": _MEASURE, "gamma": {"type": "number", "exclusiveMinimum": 0}, "a": _NUM,
                       "j_range": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}},
    },
    "kernel-bounds": {
        "type": "object",
        "required": ["symbol", "grid", "sweep"],
        "properties": {
            "symbol": _SYMBOL, "grid": _GRID,
            "sweep": {"type": "object", "required": ["epsilon", "j", "tau", "p", "nma"],
                      "properties": {"epsilon": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                                     "j": {"type": "array", "items": {"type": "integer"}},
                                     "tau": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                                     "p": {"type": "array", "items": {"anyOf": [{"type": "number", "minimum": 1},
                                                                                {"const": "inf"}]}},
                                     "nma": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
                                     "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                                     "s0_times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}}},
            "spread_limit": {"type": "number"},
            "workers": {"type": "integer", "minimum": 1},
        },
    },
    "solve": {
        "type": "object",
        "required": ["symbol", "grid", "times"],
        "properties": {"symbol": _SYMBOL, "grid": _GRID, "initial": _FIELD,
                       "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                       "forcing": {"type": "object"}, "force": {"type": "boolean"},
                       "write_fields": {"type": "boolean"}, "workers": {"type": "integer", "minimum": 1}},
    },
    "verify": {"oneOf": [_SCENARIO, {"type": "object", "required": ["scenarios"],
                                     "properties": {"scenarios": {"type": "array", "items": _SCENARIO, "minItems": 1}}}]},
    "weak-residual": {
        "type": "object",
        "required": ["symbol", "grid", "horizon"],
        "properties": {"symbol": _SYMBOL, "grid": _GRID, "initial": _FIELD,
                       "horizon": {"type": "number", "exclusiveMinimum": 0},
                       "samples": {"type": "integer", "minimum": 3},
                       "bump": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                       "mode": {"type": "integer", "minimum": 0},
                       "corrupt": {"type": "number"},
                       "tolerance": {"type": "number", "exclusiveMinimum": 0}},
    },
}


class ConfigError(ValueError):
    pass


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_config(command: str, config) -> None:
    validator = jsonschema.Draft7Validator(SCHEMAS[command])
    errors = list(validator.iter_errors(config))
    if errors:
        # descend into anyOf/oneOf branches so the pointer names the offending leaf
        leaves = []
        stack = errors[:]
        while stack:
            e = stack.pop()
            if e.context:
                stack.extend(e.context)
            else:
                leaves.append(e)
        err = max(leaves, key=lambda e: (len(e.absolute_path), [str(x) for x in e.absolute_path]))
        raise ConfigError(f"{_pointer(err.absolute_path)}: {err.message}")


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _write_outputs(out: Path, report: dict, columns: list, rows: list) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "table.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r.get(c, "")) for c in columns])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _grid(cfg: dict):
    g = cfg["grid"]
    return make_grid(int(g.get("dim", 1)), int(g["points"]), float(g["half_width"]))


def _field(grid, spec: dict | None) -> SpectralField:
    spec = spec or {"kind": "gaussian", "width": 1.0}
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        w = float(spec.get("width", 1.0))
        return SpectralField.from_values(grid, np.exp(-0.5 * (grid.abs_position / w) ** 2))
    if kind == "flat":
        return SpectralField.from_spectrum(grid, np.full(grid.shape, (2 * np.pi) ** (-grid.dim / 2), dtype=complex))
    if kind == "file":
        f = read_field(spec["path"])
        if f.grid.to_dict() != grid.to_dict():
            raise ConfigError("/field/path: stored grid differs from the configured grid")
        return f
    raise ConfigError(f"/field/kind: unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands; each returns (report, columns, rows, status, summary lines)


def cmd_check_symbol(cfg, workers):
    sym = symbol_from_spec(cfg["symbol"])
    grid = _grid(cfg)
    from .symbols import default_time_samples

    times = default_time_samples(sym, cfg.get("horizon"))
    ell = check_ellipticity(sym, grid, times)
    if "order" in cfg:
        order = int(cfg["order"])
    else:
        order = min(4, required_order(weight_from_spec(cfg.get("weight")), float(cfg.get("p", 2.0)), grid.dim))
    reg = check_regular_upper_bound(sym, order, grid, times)
    verdicts = {**ell.verdicts, **reg.verdicts}
    warnings = list(ell.warnings) + list(reg.warnings)
    status = EXIT_PASS if all(verdicts.values()) else EXIT_HARD
    if status == EXIT_PASS and warnings:
        status = EXIT_SOFT
    rows = [{"alpha": k, "ratio": v} for k, v in reg.to_dict()["per_alpha"].items()]
    report = {"symbol": sym.to_spec(), "order": order, "ellipticity": ell.to_dict(), "regular_upper_bound": reg.to_dict(),
              "verdicts": verdicts, "verdict": "pass" if status != EXIT_HARD else "fail"}
    line = (f"check-symbol {sym.name}: min ellipticity ratio {ell.min_ellipticity_ratio:.6g}, "
            f"implied M {reg.implied_M:.6g}, verdict {report['verdict']}")
    return report, ["alpha", "ratio"], rows, status, [line]


def cmd_ap_constant(cfg, workers):
    grid = _grid(cfg)
    w = weight_from_spec(cfg["weight"])
    p = float(cfg["p"])
    lo, hi = cfg.get("levels", [0, None])
    fam = BallFamily.dyadic(grid, lo, hi, exclude_origin=bool(cfg.get("exclude_origin", False)))
    prof = ap_constant_profile(w, p, grid, fam)
    member = membership_heuristic(w, p, grid)
    closed = w.in_ap(p, grid.dim)
    R = regularity_constant(w, p, grid.dim) if closed else None
    est = max(prof.values())
    status = EXIT_PASS if (member == "in" and math.isfinite(est)) else (EXIT_SOFT if member == "undecided" else EXIT_HARD)
    rows = [{"level": k, "estimate": v} for k, v in prof.items()]
    report = {"weight": w.to_spec(), "p": p, "profile": prof, "estimate": est, "membership": member,
              "closed_form_member": closed, "regularity_constant": R,
              "required_order": (int(math.floor(grid.dim / R + 1e-12)) + 2) if R else None,
              "verdict": {EXIT_PASS: "pass", EXIT_SOFT: "undecided", EXIT_HARD: "fail"}[status]}
    line = f"ap-constant {w.identifier} p={p:g}: estimate {est:.6g}, membership {member}"
    return report, ["level", "estimate"], rows, status, [line]


def cmd_lp_norm(cfg, workers):
    grid = _grid(cfg)
    frame = make_frame(grid)
    f = _field(grid, cfg.get("field"))
    spec = norm_spec_from_dict(cfg["norm"], frame)
    det = space_norm_details(f, spec, frame)
    rows = [{"j": j, "term": v} for j, v in det["terms"].items()]
    report = {"value": det["value"], "low": det["low"], "tail": det["tail"], "split_level": det["split_level"],
              "levels": det["levels"], "plain_lp": weighted_lp_norm(f, spec.p, spec.weight), "verdict": "pass"}
    return report, ["j", "term"], rows, EXIT_PASS, [f"lp-norm: value {det['value']:.10g}"]


def cmd_laplace(cfg, workers):
    m = measure_from_spec(cfg["measure"])
    rows = []
    for lam in cfg["lambdas"]:
        ll = log_laplace(m, float(lam))
        rows.append({"lambda": float(lam), "log_laplace": ll, "laplace": math.exp(ll)})
    report = {"measure": m.to_spec(), "values": rows, "verdict": "pass"}
    return report, ["lambda", "laplace", "log_laplace"], rows, EXIT_PASS, [f"laplace: {len(rows)} values"]


def cmd_control_seq(cfg, workers):
    m = measure_from_spec(cfg["measure"])
    gamma, a = float(cfg["gamma"]), float(cfg["a"])
    ctl = control_sequence(m, gamma, a, tuple(cfg["j_range"]))
    seq = ctl.sequence
    diffs = np.append(seq.differences, np.nan)
    rows = [{"j": int(j), "mu": float(v), "difference": float(d)} for j, v, d in zip(seq.indices, seq.values, diffs)]
    dbl = doubling_constant(m, 2.0**gamma)
    ws = weak_scaling_constants(m, 2.0)
    soft = not math.isfinite(dbl.value)
    report = {"measure": m.to_spec(), "gamma": gamma, "a": a, "sequence": seq.to_spec(),
              "diff_seminorm": seq.diff_seminorm, "doubling_constant": dbl.value,
              "weak_scaling": {"b": ws.b_k, "B": ws.B_k, "verdict": ws.verdict},
              "verdict": "flagged" if soft else "pass"}
    line = f"control-seq: diff seminorm {seq.diff_seminorm:.6g}, doubling N_2^gamma {dbl.value:.6g}"
    return report, ["j", "mu", "difference"], rows, EXIT_SOFT if soft else EXIT_PASS, [line]


KERNEL_COLUMNS = ["epsilon", "j", "t", "p", "n", "m", "alpha_code", "lhs", "shape", "log2_N_hat", "flags"]


def cmd_kernel_bounds(cfg, workers):
    sym = symbol_from_spec(cfg["symbol"])
    grid = _grid(cfg)
    workers = workers or int(cfg.get("workers", 1))
    rep = kernel_bound_report(sym, cfg["sweep"], grid, workers)
    limit = float(cfg.get("spread_limit", 1.0))
    worst_spread = max((c.get("spread", 0.0) for c in rep["cells_tau"].values()), default=0.0)
    worst_excess = max((c.get("max_excess_log2", 0.0) for c in rep["cells_tau"].values()), default=0.0)
    worst_slope = max((c["slope"] for c in rep["s0_cells"].values()), default=-math.inf)
    ok = worst_spread <= limit and worst_excess <= 1.0 and worst_slope <= 0.01
    flagged = any(r["flags"] for r in rep["rows"])
    status = EXIT_PASS if ok and not flagged else (EXIT_SOFT if ok else EXIT_HARD)
    report = {"symbol": sym.to_spec(), "grid": grid.to_dict(), "delta": rep["delta"], "kappa": rep["kappa"],
              "normalization": rep["normalization"], "cells": rep["cells"], "cells_tau": rep["cells_tau"],
              "s0_cells": rep["s0_cells"], "worst_spread": worst_spread, "worst_excess_log2": worst_excess,
              "worst_s0_slope": worst_slope, "flagged_rows": sum(1 for r in rep["rows"] if r["flags"]),
              "verdict": {EXIT_PASS: "pass", EXIT_SOFT: "flagged", EXIT_HARD: "fail"}[status]}
    line = (f"kernel-bounds {sym.name}: {len(rep['rows'])} rows, worst cell spread {worst_spread:.4g}, "
            f"worst S0 slope {worst_slope:.4g}, verdict {report['verdict']}")
    return report, KERNEL_COLUMNS, rep["rows"], status, [line]


def cmd_solve(cfg, workers):
    sym = symbol_from_spec(cfg["symbol"])
    grid = _grid(cfg)
    workers = workers or int(cfg.get("workers", 1))
    u0 = _field(grid, cfg.get("initial"))
    times = [float(t) for t in cfg["times"]]
    force = bool(cfg.get("force", False))
    traj = solve_homogeneous(sym, u0, times, force=force, workers=workers)
    states = list(traj.states)
    forcing = cfg.get("forcing")
    if forcing and forcing.get("kind", "zero") != "zero":
        if forcing["kind"] != "mode":
            raise ConfigError("/forcing/kind: only 'zero' and 'mode' are supported")
        vals = float(forcing.get("amplitude", 1.0)) * np.cos(grid.freq_step * int(forcing["index"]) * grid.points[0])
        fh = SpectralField.from_values(grid, vals).spectrum
        du = solve_inhomogeneous(sym, lambda s: fh, times, grid, force=force, workers=workers)
        states = [a + b for a, b in zip(states, du.states)]
    rows = []
    out_fields = []
    for t, st in zip(times, states):
        rows.append({"t": t, "l2": weighted_lp_norm(st, 2.0), "sup": float(np.max(np.abs(st.values))),
                     "value_at_origin": float(st.values[grid.origin_index].real)})
        out_fields.append(st)
    report = {"symbol": sym.to_spec(), "grid": grid.to_dict(), "samples": rows, "verdict": "pass"}
    report["_fields"] = out_fields if cfg.get("write_fields") else []
    return report, ["t", "l2", "sup", "value_at_origin"], rows, EXIT_PASS, [f"solve {sym.name}: {len(times)} times"]


def cmd_verify(cfg, workers):
    docs = cfg["scenarios"] if "scenarios" in cfg else [cfg]
    reports, rows, lines = [], [], []
    status = EXIT_PASS
    for doc in docs:
        sc = scenario_from_dict(doc)
        rep = verify_estimate(sc, workers or None)
        reports.append(rep.to_dict())
        for r in rep.rows:
            rows.append({"scenario": sc.name, **r})
        v = rep.summary["verdict"]
        status = max(status, {"pass": EXIT_PASS, "flagged": EXIT_SOFT, "fail": EXIT_HARD}[v], key=_severity)
        lines.append(f"verify {sc.name} [{sc.kind}]: max ratio {rep.summary['max_ratio']:.6g}, verdict {v}")
    verdict = {EXIT_PASS: "pass", EXIT_SOFT: "flagged", EXIT_HARD: "fail"}[status]
    report = {"scenarios": reports, "verdict": verdict}
    return report, ["scenario", "datum_id", "lhs", "rhs", "ratio", "flags"], rows, status, lines


def cmd_weak_residual(cfg, workers):
    sym = symbol_from_spec(cfg["symbol"])
    grid = _grid(cfg)
    T = float(cfg["horizon"])
    times = np.linspace(0.0, T, int(cfg.get("samples", 128)))
    u0 = _field(grid, cfg.get("initial"))
    traj = solve_homogeneous(sym, u0, times)
    if "corrupt" in cfg:
        c = float(cfg["corrupt"])
        traj = traj.scaled_states(lambda t: c if t >= 0.5 * T else 1.0)
    a, b = cfg.get("bump", [0.05 * T, 0.95 * T])
    k = int(cfg.get("mode", 2))
    phi = SpectralField.from_values(grid, np.cos(grid.freq_step * k * grid.points[0]))
    res = weak_residual(sym, traj, TimeBump(float(a), float(b)), phi)
    tol = float(cfg.get("tolerance", 1e-5))
    ok = res["residual"] <= tol
    report = {"residual": res["residual"], "lhs": res["lhs"], "rhs": res["rhs"], "tolerance": tol,
              "verdict": "pass" if ok else "fail"}
    rows = [{"residual": res["residual"], "lhs_real": res["lhs"].real, "rhs_real": res["rhs"].real}]
    line = f"weak-residual {sym.name}: residual {res['residual']:.3e} (tolerance {tol:g})"
    return report, ["residual", "lhs_real", "rhs_real"], rows, EXIT_PASS if ok else EXIT_HARD, [line]


def _severity(code):
    return {EXIT_PASS: 0, EXIT_SOFT: 1, EXIT_HARD: 2}[code]


COMMANDS = {
    "check-symbol": cmd_check_symbol,
    "ap-constant": cmd_ap_constant,
    "lp-norm": cmd_lp_norm,
    "laplace": cmd_laplace,
    "control-seq": cmd_control_seq,
    "kernel-bounds": cmd_kernel_bounds,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "weak-residual": cmd_weak_residual,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psido-ivp", description="Spectral checks for time-measurable pseudo-differential evolution equations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory for report.json and table.csv")
        p.add_argument("--workers", type=int, default=0, help="thread count (0: use the config value or 1)")
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_HARD
    try:
        validate_config(args.command, cfg)
        report, columns, rows, status, lines = COMMANDS[args.command](cfg, args.workers)
    except ConfigError as exc:
        print(f"error: invalid config at {exc}", file=sys.stderr)
        return EXIT_HARD
    except EstimateViolation as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_HARD
    except (ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HARD
    out = Path(args.out) if args.out else Path(".")
    fields = report.pop("_fields", [])
    _write_outputs(out, {"command": args.command, **report}, columns, rows)
    for i, f in enumerate(fields):
        write_field(out / f"state_{i:03d}.bin", f)
    for line in lines:
        print(line)
    return status


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
