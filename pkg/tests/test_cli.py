import csv
import json
from pathlib import Path

import pytest

from psido_ivp.cli import KERNEL_COLUMNS, SCHEMAS, ConfigError, cli_main, validate_config

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def run(tmp_path, command, config, *extra):
    if isinstance(config, dict):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
    else:
        path = CONFIGS / config
    out = tmp_path / "out"
    code = cli_main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_verify_second_order(tmp_path, capsys):
    code, out = run(tmp_path, "verify", "second_order.json")
    assert code == 0
    rows = read_csv(out / "table.csv")
    assert rows[0] == ["scenario", "datum_id", "lhs", "rhs", "ratio", "flags"]
    assert len(rows) == 4
    assert all(float(r[4]) > 0 for r in rows[1:])
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "pass"
    assert "max ratio" in capsys.readouterr().out


def test_kernel_bounds_columns(tmp_path):
    cfg = json.loads((CONFIGS / "heat_sweep.json").read_text())
    cfg["sweep"].update(j=[0, 1], epsilon=[0])
    code, out = run(tmp_path, "kernel-bounds", cfg)
    assert code in (0, 2)
    rows = read_csv(out / "table.csv")
    assert rows[0] == KERNEL_COLUMNS
    assert len(rows) > 1
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] in ("pass", "flagged")


def test_check_symbol_bad(tmp_path):
    code, out = run(tmp_path, "check-symbol", "bad_symbol.json")
    assert code == 1
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "fail"


def test_check_symbol_heat(tmp_path):
    code, _ = run(tmp_path, "check-symbol", "heat_symbol.json")
    assert code == 0


@pytest.mark.parametrize("command,config", [
    ("ap-constant", "ap_power.json"),
    ("lp-norm", "besov_norm.json"),
    ("laplace", "laplace_power.json"),
    ("control-seq", "control_two_branch.json"),
    ("solve", "heat_solve.json"),
    ("weak-residual", "weak_heat.json"),
])
def test_shipped_configs_pass(tmp_path, command, config):
    code, out = run(tmp_path, command, config)
    assert code == 0
    assert (out / "report.json").exists() and (out / "table.csv").exists()


def test_malformed_config_points_at_field(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "second_order.json").read_text())
    cfg["grid"]["points"] = "many"
    code, _ = run(tmp_path, "verify", cfg)
    assert code == 1
    assert "/grid/points" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_main(["laplace", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_validate_config_pointer():
    with pytest.raises(ConfigError, match="/symbol"):
        validate_config("check-symbol", {"symbol": 3, "grid": {"points": 64, "half_width": 8}})
    assert set(SCHEMAS) == {"check-symbol", "ap-constant", "lp-norm", "laplace", "control-seq", "kernel-bounds",
                            "solve", "verify", "weak-residual"}


def test_weak_residual_corruption_fails(tmp_path):
    cfg = json.loads((CONFIGS / "weak_heat.json").read_text())
    cfg["corrupt"] = 1.01
    code, out = run(tmp_path, "weak-residual", cfg)
    assert code == 1
    assert json.loads((out / "report.json").read_text())["residual"] >= 1e-3


def test_solve_writes_fields(tmp_path):
    from psido_ivp.spectral_core import read_field

    cfg = json.loads((CONFIGS / "heat_solve.json").read_text())
    cfg["write_fields"] = True
    code, out = run(tmp_path, "solve", cfg)
    assert code == 0
    files = sorted(out.glob("state_*.bin"))
    assert len(files) == len(cfg["times"])
    assert read_field(files[0]).grid.points_per_axis == cfg["grid"]["points"]


def test_reports_identical_across_workers(tmp_path):
    verify_cfg = {"kind": "homogeneous_bessel", "symbol": {"kind": "fractional_laplacian", "gamma": 2}, "a": 0.5,
                  "grid": {"points": 256, "half_width": 16}, "data": {"kind": "random", "seed": 2, "count": 4}}
    sweep_cfg = json.loads((CONFIGS / "heat_sweep.json").read_text())
    sweep_cfg["sweep"].update(j=[0, 1, 2])
    for command, cfg in (("verify", verify_cfg), ("kernel-bounds", sweep_cfg)):
        blobs = []
        for w in (1, 4, 8):
            d = tmp_path / f"{command}-{w}"
            d.mkdir()
            run(d, command, cfg, "--workers", str(w))
            out = d / "out"
            blobs.append(((out / "report.json").read_bytes(), (out / "table.csv").read_bytes()))
        assert blobs[0] == blobs[1] == blobs[2]
