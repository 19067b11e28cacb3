"""
The command-line interface
==========================

Every capability is also reachable as ``psido-ivp <command> --config file.json
--out dir``.  Each run writes ``report.json`` and ``table.csv``; the exit code
is 0 when all verdicts pass, 2 for soft flags and 1 for violations or bad input.
"""

import tempfile
from pathlib import Path

from psido_ivp.cli import cli_main

configs = Path(__file__).resolve().parent / "configs"
runs = [
    ("check-symbol", "heat_symbol.json"),
    ("check-symbol", "bad_symbol.json"),
    ("laplace", "laplace_power.json"),
    ("control-seq", "control_two_branch.json"),
    ("weak-residual", "weak_heat.json"),
    ("verify", "second_order.json"),
]
with tempfile.TemporaryDirectory() as tmp:
    for command, name in runs:
        out = Path(tmp) / f"{command}-{name}"
        code = cli_main([command, "--config", str(configs / name), "--out", str(out)])
        print(f"-> exit {code}; wrote {sorted(p.name for p in out.iterdir())}")
