"""Command-line experiment runner.

Usage::

    kerrsim run <config.yaml>
    kerrsim validate <config.yaml>
    kerrsim list-experiments

One YAML config file describes one experiment: its name, typed
parameters, an optional sweep axis with a grid, a seed, the output path
and a worker count (overridable with the KERRSIM_WORKERS environment
variable).  ``run`` writes one CSV of results plus a JSON manifest that
echoes the config, records per-point status, and versions the schema.
Identical config and seed give byte-identical CSV output; a failing
sweep point is recorded in the manifest without aborting the sweep.

Exit codes: 0 success, 1 validation failure, 2 partial point failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np
import yaml

from . import __version__, experiments

CSV_SCHEMA_VERSION = 1

EXPERIMENTS = tuple(experiments.COLUMNS)

#: Parameters every experiment requires beyond the generic keys.
REQUIRED_PARAMS = {
    "steadystate": {"kerr", "drive"},
    "relax": {"kerr", "drive"},
    "trajectories": {"kerr", "drive"},
    "liouvillian_rate": {"kerr", "drive"},
    "escape_rate": {"kerr", "drive"},
    "crossover": {"kerr", "drive"},
    "lineshape": {"kerr0", "kerr1", "kappa0", "cross_kerr", "drive0",
                  "drive1"},
    "classical_compare": {"kerr", "drive", "delta"},
    "circuit": {"n_junctions", "l_j_nh", "c_j_ff", "c_0_ff", "c_s_ff",
                "c_g_ff", "c_e_ff"},
}


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a mapping")
    return cfg


def sweep_grid(cfg: dict):
    """Materialize the sweep grid; None for gridless experiments."""
    sweep = cfg.get("sweep")
    if sweep is None:
        return None, None
    axis = sweep.get("axis")
    if "values" in sweep:
        grid = np.asarray(sweep["values"], dtype=float)
    else:
        g = sweep.get("grid", {})
        grid = np.linspace(float(g.get("start", 0.0)),
                           float(g.get("stop", 1.0)),
                           int(g.get("num", 0)))
    return axis, grid


def validate(cfg: dict) -> list:
    """Schema and physics checks; returns a list of diagnostics."""
    issues = []
    name = cfg.get("experiment")
    if name not in EXPERIMENTS:
        issues.append(f"unknown experiment {name!r}; see list-experiments")
        return issues
    params = cfg.get("parameters") or {}
    if not isinstance(params, dict):
        issues.append("parameters must be a mapping")
        return issues
    missing = REQUIRED_PARAMS[name] - set(params)
    if missing:
        issues.append(f"missing parameters: {sorted(missing)}")
    kappa_keys = [k for k in ("kappa", "kappa0", "kappa1") if k in params]
    for k in kappa_keys:
        if float(params[k]) <= 0:
            issues.append(f"{k} must be positive")
    if "kerr" in params and float(params["kerr"]) < 0:
        issues.append("kerr must be non-negative")
    dim = params.get("dim")
    if dim is not None and (int(dim) < 2 or int(dim) > 90):
        issues.append("dim must be in [2, 90]")
    axis, grid = sweep_grid(cfg)
    allowed = experiments.SWEEP_AXES[name]
    if allowed and axis is None:
        issues.append(f"experiment {name} requires a sweep over {sorted(allowed)}")
    if axis is not None:
        if axis not in allowed:
            issues.append(f"sweep axis {axis!r} not applicable to {name}")
        if grid is None or len(grid) == 0:
            issues.append("sweep grid is empty")
        elif np.any(np.diff(grid) <= 0) and len(grid) > 1:
            issues.append("sweep grid must be strictly increasing")
    if name == "lineshape":
        t_m = float(params.get("t_m", 20.0 / float(params.get("kappa0", 1.0))))
        dt = float(params.get("dt", 5e-4))
        if t_m <= 10 * dt:
            issues.append("t_m must exceed 10 integration steps")
    if "output" not in cfg:
        issues.append("missing output path")
    if int(cfg.get("workers", 1)) < 1:
        issues.append("workers must be >= 1")
    return issues


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, columns, rows):
    """Write rows in sweep order, flushing after each row.

    Failed points (rows that are None) are skipped; previously written
    rows are never touched again.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        fh.flush()
        for row in rows:
            if row is None:
                continue
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
            fh.flush()


def run(cfg: dict) -> int:
    issues = validate(cfg)
    if issues:
        for msg in issues:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    name = cfg["experiment"]
    seed = int(cfg.get("seed", 0))
    workers = int(os.environ.get("KERRSIM_WORKERS", cfg.get("workers", 1)))
    params = dict(cfg.get("parameters") or {})
    axis, grid = sweep_grid(cfg)
    out_base = str(cfg["output"])
    os.makedirs(os.path.dirname(out_base) or ".", exist_ok=True)
    t0 = time.time()
    extra_outputs = {}
    if name == "lineshape":
        rows, statuses, _ = experiments.run_lineshape(params, grid, seed,
                                                      workers)
    elif name == "classical_compare":
        rows, statuses = experiments.run_classical_compare(params, seed)
    elif name == "circuit":
        rows, statuses, table = experiments.run_circuit(params)
        table_path = out_base + ".modes.json"
        with open(table_path, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2)
        extra_outputs["mode_table"] = table_path
    else:
        rows, statuses = experiments.run_sweep(name, params, grid, seed,
                                               workers)
    csv_path = out_base + ".csv"
    write_csv(csv_path, experiments.COLUMNS[name], rows)
    n_failed = sum(1 for s in statuses if s["status"] != "done")
    manifest = {
        "experiment": name,
        "config": cfg,
        "code_version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "wall_time_s": time.time() - t0,
        "points": statuses,
        "outputs": {"csv": csv_path, **extra_outputs},
    }
    with open(out_base + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"{name}: {len(statuses) - n_failed}/{len(statuses)} points done "
          f"-> {csv_path}")
    return 2 if n_failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kerrsim",
        description="Driven-dissipative Kerr oscillator experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    sub.add_parser("list-experiments", help="show available experiments")
    args = parser.parse_args(argv)
    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, yaml.YAMLError) as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 1
    if args.command == "validate":
        issues = validate(cfg)
        for msg in issues:
            print(f"config error: {msg}", file=sys.stderr)
        print("valid" if not issues else f"{len(issues)} issue(s)")
        return 1 if issues else 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
