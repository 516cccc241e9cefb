"""Command line entry points.

    vortexlayer run    --config FILE | --scenario NAME [overrides] --out DIR
    vortexlayer sweep  [--scenario NAME] [--nu-list ...] --out DIR
    vortexlayer audit  --out DIR    (existing run directory)
    vortexlayer kinetic --out DIR   (existing run directory)

Exit code 0 on success, 1 on any runtime or validation failure (with a
diagnostic on stderr), 2 on bad usage.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import snapshots
from .config import SCENARIO_NAMES, RunConfig, canonical_text, load_config, scenario
from .elliptic import SolverConvergenceError
from .entropy_audit import audit_tolerance, default_test_functions, residual_matrix
from .kinetic import kinetic_grid_for, kinetic_report_rows
from .transport import BlowUpError
from .vanishing_viscosity import SweepConfig, run_config, run_sweep, write_sweep_outputs


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vortexlayer", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="config file path or inline INI text")
        p.add_argument("--scenario", choices=SCENARIO_NAMES, help="built-in scenario preset")
        p.add_argument("--model", help="flux model override")
        p.add_argument("--nu", type=float, help="viscosity override")
        p.add_argument("--nx", type=int, help="cells per axis override (sets nx and ny)")
        p.add_argument("--t-final", type=float, dest="t_final", help="final time override")
        p.add_argument("--print-config", action="store_true", help="echo the config and exit")

    rp = sub.add_parser("run", help="execute one configured run")
    add_config_flags(rp)
    rp.add_argument("--out", help="output directory for the CSV bundle")

    sp = sub.add_parser("sweep", help="viscosity sweep with nu-resolved grids")
    sp.add_argument("--scenario", choices=SCENARIO_NAMES, default="meanfield_nucleation")
    sp.add_argument("--nu-list", dest="nu_list", help="comma-separated decreasing nu values")
    sp.add_argument(
        "--grid-rule",
        dest="grid_rule",
        default="nu/4",
        help="'nu/D' to resolve dx = min(dx_max, nu/D), or 'fixed' for the scenario grid",
    )
    sp.add_argument("--p-list", dest="p_list", default="1,2,4", help="norm exponents")
    sp.add_argument("--audit", action="store_true", help="entropy audit per run")
    sp.add_argument("--kinetic", action="store_true", help="kinetic report per run")
    sp.add_argument("--out", required=True, help="sweep output directory")

    apd = sub.add_parser("audit", help="entropy audit of an existing run directory")
    apd.add_argument("--out", required=True, help="run directory to audit")
    apd.add_argument("--tol", type=float, help="override the residual floor")
    apd.add_argument("--levels", type=int, default=128, help="number of entropy levels")

    kp = sub.add_parser("kinetic", help="kinetic identity report for a run directory")
    kp.add_argument("--out", required=True, help="run directory to analyze")
    kp.add_argument("--levels", type=int, default=128, help="number of kinetic levels")
    return ap


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        cfg = scenario(args.scenario)
    else:
        cfg = RunConfig()
    if args.model is not None:
        cfg.model = args.model
    if args.nu is not None:
        cfg.nu = args.nu
    if args.nx is not None:
        cfg.nx = cfg.ny = args.nx
    if args.t_final is not None:
        cfg.t_final = args.t_final
    return cfg.validate()


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    if args.print_config:
        sys.stdout.write(canonical_text(cfg))
        return 0
    result = run_config(cfg)
    if args.out:
        snapshots.write_run(args.out, result, cfg)
    drift = float(np.max(np.abs(result.omegas[-1] - result.omegas[0])))
    print(f"steps = {len(result.reports)}")
    print(f"sup |omega| = {result.sup_omega:.17g}")
    print(f"sqrt(nu) grad norm = {result.sqrt_nu_grad_l2:.17g}")
    print(f"final max drift = {drift:.17g}")
    if args.out:
        print(f"wrote {len(result.times)} snapshots to {args.out}")
    return 0


def _audit_run_dir(run_dir, tol=None, levels=128) -> tuple[float, float]:
    result = snapshots.load_run(run_dir)
    kg = kinetic_grid_for(result.sup_omega, levels)
    fam = default_test_functions(result.times[-1], result.grid.lx, result.grid.ly)
    matrix = residual_matrix(result, kg.levels, fam, "kruzkov")
    if tol is None:
        dt = max((r.dt for r in result.reports), default=result.times[-1] / max(len(result.times) - 1, 1))
        tol = audit_tolerance(result.grid.dx, dt)
    snapshots.write_entropy_report(
        os.path.join(run_dir, "entropy_report.csv"),
        kg.levels,
        [p.label for p in fam],
        matrix,
        tol,
    )
    return float(matrix.min()), float(tol)


def _cmd_sweep(args) -> int:
    nus = None
    if args.nu_list:
        nus = tuple(float(s) for s in args.nu_list.split(",") if s.strip())
    rule = args.grid_rule.strip().lower()
    base = scenario(args.scenario)
    if rule == "fixed":
        # nu/divisor becomes huge, so dx_max (the scenario's own dx) always wins
        dx_max = base.lx / base.nx
        grid_divisor = 1e-30
    elif rule.startswith("nu/"):
        grid_divisor = float(rule[3:])
        dx_max = 0.1
    else:
        raise ValueError(f"unknown grid rule {args.grid_rule!r}; expected 'nu/D' or 'fixed'")
    cfg = SweepConfig(
        scenario=args.scenario,
        nus=nus if nus is not None else SweepConfig.nus,
        dx_max=dx_max,
        grid_divisor=grid_divisor,
        p_list=tuple(int(s) for s in args.p_list.split(",") if s.strip()),
        audit=args.audit,
        kinetic=args.kinetic,
        out_dir=args.out,
    )
    report = run_sweep(cfg)
    write_sweep_outputs(report, args.out)
    for nu, msg in report.errors.items():
        print(f"nu = {nu:g} failed: {msg}", file=sys.stderr)
    for p, vals in report.consecutive.items():
        chain = " -> ".join(f"{v:.6e}" for v in vals)
        print(f"L{p} consecutive distances: {chain}")
        print(f"L{p} Cauchy verdict: {'pass' if report.cauchy[p] else 'FAIL'}")
    if cfg.audit or cfg.kinetic:
        for run_dir in report.run_dirs:
            if not os.path.isdir(run_dir):
                continue
            if cfg.audit:
                worst, tol = _audit_run_dir(run_dir)
                print(f"{run_dir}: audit min residual {worst:.6e} (floor -{tol:.6e})")
            if cfg.kinetic:
                result = snapshots.load_run(run_dir)
                rows = kinetic_report_rows(result)
                snapshots.write_kinetic_report(os.path.join(run_dir, "kinetic_report.csv"), rows)
    return 1 if report.errors else 0


def _cmd_audit(args) -> int:
    worst, tol = _audit_run_dir(args.out, args.tol, args.levels)
    ok = worst >= -tol
    print(f"min residual = {worst:.17g}")
    print(f"floor = -{tol:.17g}")
    print(f"verdict: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_kinetic(args) -> int:
    result = snapshots.load_run(args.out)
    kg = kinetic_grid_for(result.sup_omega, args.levels)
    rows = kinetic_report_rows(result, kg)
    snapshots.write_kinetic_report(os.path.join(args.out, "kinetic_report.csv"), rows)
    by_name = {r[0]: r[3] for r in rows}
    print(f"reconstruction max error = {by_name['reconstruction_max_error']:.17g}")
    print(f"moment gap max = {by_name['rho_gap_max']:.17g}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "audit": _cmd_audit,
        "kinetic": _cmd_kinetic,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, FileNotFoundError, BlowUpError, SolverConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
