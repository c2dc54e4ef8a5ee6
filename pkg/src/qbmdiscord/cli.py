"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 phase-diagram run with failed rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from .asymptotics import asymptotic_invariants, asymptotic_params, summarize
from .config import RunConfig
from .dynamics import evolve, output_times, trajectory_rows, TRAJECTORY_COLUMNS
from .environment import SpectralDensity, SystemConfig, coefficients_position, coefficients_symmetric
from .errors import ConfigError, QBMError
from .gaussian_core import CouplingKind, build_initial_state, entropy_f
from .validation import flipped_entropy, run_validation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS, EXIT_PARTIAL = 0, 2, 3, 4

PHASE_COLUMNS = ("r", "T", "ent_phase", "disc_phase", "EN_mean", "EN_max", "EN_min", "discord_mean", "discord_pp", "status")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_table(path: Path, columns: list[str] | tuple[str, ...], rows: list[list], fmt_kind: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt_kind == "json":
        path = path.with_suffix(".json")
        records = [dict(zip(columns, (_json_value(v) for v in row))) for row in rows]
        path.write_text(json.dumps(records, indent=1) + "\n")
        return path
    path = path.with_suffix(".csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows([[fmt(v) for v in row] for row in rows])
    return path


def _json_value(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return float(v) if isinstance(v, (float, np.floating)) else v


def _system(cfg: RunConfig) -> SystemConfig:
    return SystemConfig(mass=cfg.mass, omega=cfg.omega, coupling=cfg.coupling)


def _bath(cfg: RunConfig) -> SpectralDensity:
    return SpectralDensity(cfg.gamma0, cfg.cutoff, cfg.n, cfg.mass)


# --- subcommands ------------------------------------------------------------------------------------


def cmd_coefficients(cfg: RunConfig) -> Path:
    t = output_times(cfg.t_max, cfg.dt_out)
    sd = _bath(cfg)
    if cfg.coupling is CouplingKind.POSITION:
        coeffs = coefficients_position(sd, cfg.temperature, t, cfg.omega, method=cfg.method)
    else:
        coeffs = coefficients_symmetric(sd, cfg.temperature, t, cfg.omega)
    names, cols = coeffs.csv_columns()
    rows = [list(r) for r in zip(*cols)]
    return write_table(Path(cfg.directory) / "coefficients", names, rows, cfg.format)


def cmd_evolve(cfg: RunConfig) -> Path:
    init = build_initial_state(cfg.kind, cfg.r, cfg.phi_minus)
    pts = evolve(init, _system(cfg), _bath(cfg), cfg.temperature, cfg.t_max, cfg.dt_out, method=cfg.method)
    return write_table(Path(cfg.directory) / "trajectory", TRAJECTORY_COLUMNS, trajectory_rows(pts), cfg.format)


def cmd_asymptotic(cfg: RunConfig) -> Path:
    p = asymptotic_params(_system(cfg), _bath(cfg), cfg.temperature, cfg.r, cfg.phi_minus, cfg.method)
    s = summarize(p)
    inv = asymptotic_invariants(p, 0.0)
    columns = ["r", "T", "phi_plus", "phi_minus", "r_crit", "A", "B", "C", "D", *s.row().keys()]
    row = [cfg.r, cfg.temperature, p.phi_plus, p.phi_minus, p.r_crit, inv.A, inv.B, inv.C, inv.D, *s.row().values()]
    return write_table(Path(cfg.directory) / "asymptotic", columns, [row], cfg.format)


def phase_cell(args: tuple[RunConfig, float, float, float]) -> list:
    cfg, r, T, phi_minus = args
    try:
        s = summarize(asymptotic_params(_system(cfg), _bath(cfg), T, r, phi_minus, cfg.method))
    except QBMError as exc:
        return [r, T, "", "", *([float("nan")] * 5), f"error: {type(exc).__name__}: {exc}"]
    return [r, T, *s.row().values(), "ok"]


def phase_rows(cfg: RunConfig) -> tuple[list[str], list[list]]:
    phis = cfg.sweep_phi_minus or (cfg.phi_minus,)
    cells = [(cfg, r, T, phi) for phi in phis for r in cfg.sweep_r for T in cfg.sweep_T]
    if cfg.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(phase_cell, cells, chunksize=max(1, len(cells) // (4 * cfg.workers))))
    else:
        rows = [phase_cell(c) for c in cells]
    columns = list(PHASE_COLUMNS)
    if cfg.sweep_phi_minus:
        columns.insert(2, "phi_minus")
        rows = [[row[0], row[1], cell[3], *row[2:]] for row, cell in zip(rows, cells)]
        rows.sort(key=lambda row: (row[0], row[1], row[2]))
    else:
        rows.sort(key=lambda row: (row[0], row[1]))
    return columns, rows


def cmd_phase_diagram(cfg: RunConfig) -> tuple[Path, int]:
    columns, rows = phase_rows(cfg)
    failed = sum(1 for row in rows if row[-1] != "ok")
    return write_table(Path(cfg.directory) / "phase_diagram", columns, rows, cfg.format), failed


# --- entry point ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key-value config file")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--format", choices=config_mod.FORMATS, help="output format")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="seed for randomized validation suites")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override one config value")

    parser = argparse.ArgumentParser(prog="qbmdiscord", description="Entanglement and Gaussian discord of two oscillators in a common bath.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coefficients", parents=[common], help="write master-equation coefficient traces")
    sub.add_parser("evolve", parents=[common], help="write a trajectory of invariants, E_N and discord")
    sub.add_parser("asymptotic", parents=[common], help="summarize the asymptotic state")
    sub.add_parser("phase-diagram", parents=[common], help="sweep (r, T) and classify asymptotic phases")
    val = sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    val.add_argument("--quick", action="store_true", help="skip the full-bath oracle comparison")
    val.add_argument("--inject-fault", choices=["entropy-sign"], help=argparse.SUPPRESS)
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.set)
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    if args.format is not None:
        overrides.append(f"output.format={args.format}")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    return config_mod.load(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            entropy = flipped_entropy if args.inject_fault == "entropy-sign" else entropy_f
            checks = run_validation(cfg.seed, entropy=entropy, quick=args.quick)
            for c in checks:
                print(c.line())
            return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERICS
        if args.command == "phase-diagram":
            path, failed = cmd_phase_diagram(cfg)
            print(path)
            if failed:
                print(f"{failed} grid cell(s) failed", file=sys.stderr)
                return EXIT_PARTIAL
            return EXIT_OK
        handler = {"coefficients": cmd_coefficients, "evolve": cmd_evolve, "asymptotic": cmd_asymptotic}[args.command]
        print(handler(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QBMError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
