"""Plain-CSV persistence of runs and reports.

Every number is written with %.17g, enough decimal digits that a float64
survives the decimal round-trip bit-exactly, and all files are plain
comma-separated ASCII so any consumer can read them without a schema.

A run directory contains:

    config.cfg            the canonical config that produced the run
    snap_<t>.csv          one per output time: metadata header + omega,h rows
    grad_<t>.csv          optional gradient snapshots (same layout)
    monitors.csv          one row per time step
    entropy_report.csv    audit table (xi, phi_id, residual, pass)
    kinetic_report.csv    kinetic identity table
"""
from __future__ import annotations

import glob
import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, canonical_text, load_config
from .flux_models import by_name
from .geometry import Grid
from .transport import RunResult, StepReport

SNAP_META = "t,nx,ny,lx,ly,nu,model"
SNAP_COLUMNS = "omega,h"
GRAD_COLUMNS = "dwdx,dwdy"
MONITOR_COLUMNS = (
    "step,t,dt,mass_before,mass_after,boundary_advective_outflux,"
    "boundary_diffusive_outflux,omega_min,omega_max,mass_identity_error,"
    "robin_m,grad_energy,energy_residual"
)
ENTROPY_COLUMNS = "xi,phi_id,residual,pass"
KINETIC_COLUMNS = "record,eps,xi,value"
SWEEP_COLUMNS = (
    "nu,nx,ny,steps,sup_omega,sqrt_nu_grad_l2,mass_initial,mass_final,"
    "max_mass_error,robin_max"
)
DISTANCE_COLUMNS = "nu_i,nu_j,p,distance"
LAYER_COLUMNS = "nu,face_group,depth,depth_over_nu,omega"


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def snapshot_name(t: float) -> str:
    return f"snap_{t:.6f}.csv"


def gradient_name(t: float) -> str:
    return f"grad_{t:.6f}.csv"


# ---------------------------------------------------------------------------
# single-snapshot files


def _write_field_csv(path, columns, meta_values, arrays):
    rows = np.column_stack([a.reshape(-1) for a in arrays])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(SNAP_META + "\n")
        fh.write(",".join(meta_values) + "\n")
        fh.write(columns + "\n")
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",")


def _meta_values(t, grid: Grid, nu: float, model_name: str):
    return (
        _fmt(t),
        str(grid.nx),
        str(grid.ny),
        _fmt(grid.lx),
        _fmt(grid.ly),
        _fmt(nu),
        model_name,
    )


def write_snapshot(path, t, grid: Grid, nu, model_name, omega, h) -> None:
    """One output time: metadata header, then nx*ny rows of omega,h in
    row-major cell order."""
    _write_field_csv(path, SNAP_COLUMNS, _meta_values(t, grid, nu, model_name), (omega, h))


def write_gradient(path, t, grid: Grid, nu, model_name, dwdx, dwdy) -> None:
    _write_field_csv(path, GRAD_COLUMNS, _meta_values(t, grid, nu, model_name), (dwdx, dwdy))


@dataclass
class SnapshotData:
    t: float
    grid: Grid
    nu: float
    model_name: str
    columns: tuple
    fields: tuple  # arrays shaped (nx, ny), one per column


def read_snapshot(path) -> SnapshotData:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != SNAP_META:
            raise ValueError(f"{path}: bad metadata header {header!r}, expected {SNAP_META!r}")
        meta = fh.readline().strip().split(",")
        if len(meta) != 7:
            raise ValueError(f"{path}: metadata row has {len(meta)} entries, expected 7")
        t = float(meta[0])
        nx, ny = int(meta[1]), int(meta[2])
        grid = Grid(nx, ny, float(meta[3]), float(meta[4]))
        nu = float(meta[5])
        model_name = meta[6]
        by_name(model_name)  # validates
        columns = tuple(fh.readline().strip().split(","))
        body = fh.read()
    if not body.strip():
        raise ValueError(f"{path}: empty payload")
    payload = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    if payload.shape != (nx * ny, len(columns)):
        raise ValueError(
            f"{path}: payload shape {payload.shape} does not match header "
            f"nx*ny={nx * ny} with {len(columns)} columns"
        )
    fields = tuple(payload[:, k].reshape(nx, ny) for k in range(len(columns)))
    return SnapshotData(t=t, grid=grid, nu=nu, model_name=model_name, columns=columns, fields=fields)


# ---------------------------------------------------------------------------
# monitors


def write_monitors(path, reports: list[StepReport]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MONITOR_COLUMNS + "\n")
        for r in reports:
            fh.write(
                ",".join(
                    [str(r.step_index)]
                    + [
                        _fmt(v)
                        for v in (
                            r.t,
                            r.dt,
                            r.mass_before,
                            r.mass_after,
                            r.boundary_advective_outflux,
                            r.boundary_diffusive_outflux,
                            r.omega_min,
                            r.omega_max,
                            r.mass_identity_error,
                            r.robin_m,
                            r.grad_energy,
                            r.energy_residual,
                        )
                    ]
                )
                + "\n"
            )


def read_monitors(path) -> list[StepReport]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != MONITOR_COLUMNS:
            raise ValueError(f"{path}: bad monitors header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != 13:
                raise ValueError(f"{path}: monitors row has {len(cells)} entries, expected 13")
            vals = [float(c) for c in cells[1:]]
            out.append(StepReport(int(cells[0]), *vals))
    return out


# ---------------------------------------------------------------------------
# whole-run round trip


def write_run(out_dir, result: RunResult, cfg: RunConfig | None = None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    if cfg is not None:
        with open(os.path.join(out_dir, "config.cfg"), "w", encoding="ascii") as fh:
            fh.write(canonical_text(cfg))
    name = result.model.name
    for k, t in enumerate(result.times):
        write_snapshot(
            os.path.join(out_dir, snapshot_name(t)),
            t,
            result.grid,
            result.nu,
            name,
            result.omegas[k],
            result.hs[k],
        )
        if result.gradients is not None:
            gx, gy = result.gradients[k]
            write_gradient(
                os.path.join(out_dir, gradient_name(t)), t, result.grid, result.nu, name, gx, gy
            )
    write_monitors(os.path.join(out_dir, "monitors.csv"), result.reports)


def load_run(run_dir) -> RunResult:
    """Rebuild a RunResult from a run directory written by write_run.

    Needs config.cfg for the boundary data; per-step reports come from
    monitors.csv when present, else stay empty.
    """
    paths = sorted(glob.glob(os.path.join(run_dir, "snap_*.csv")))
    if not paths:
        raise FileNotFoundError(f"no snapshots in {run_dir}")
    cfg_path = os.path.join(run_dir, "config.cfg")
    if not os.path.exists(cfg_path):
        raise FileNotFoundError(f"{run_dir}: config.cfg missing, cannot rebuild boundary data")
    cfg = load_config(cfg_path)

    snaps = sorted((read_snapshot(p) for p in paths), key=lambda s: s.t)
    first = snaps[0]
    for s in snaps[1:]:
        if s.grid != first.grid or s.nu != first.nu or s.model_name != first.model_name:
            raise ValueError(f"{run_dir}: snapshots disagree on grid/nu/model metadata")
    times = [s.t for s in snaps]
    omegas = [s.fields[0] for s in snaps]
    hs = [s.fields[1] for s in snaps]

    gradients = None
    gpaths = [os.path.join(run_dir, gradient_name(t)) for t in times]
    if all(os.path.exists(p) for p in gpaths):
        gsnaps = [read_snapshot(p) for p in gpaths]
        gradients = [(g.fields[0], g.fields[1]) for g in gsnaps]

    mon_path = os.path.join(run_dir, "monitors.csv")
    reports = read_monitors(mon_path) if os.path.exists(mon_path) else []
    if reports:
        sup_omega = max(max(abs(r.omega_min), abs(r.omega_max)) for r in reports)
        grad_integral = sum(r.dt * r.grad_energy for r in reports)
    else:
        sup_omega = max(float(np.max(np.abs(w))) for w in omegas)
        grad_integral = 0.0
    sup_omega = max(sup_omega, float(np.max(np.abs(omegas[0]))))

    return RunResult(
        grid=first.grid,
        model=by_name(first.model_name),
        nu=first.nu,
        boundary=cfg.boundary(),
        times=times,
        omegas=omegas,
        hs=hs,
        gradients=gradients,
        reports=reports,
        sup_omega=sup_omega,
        grad_energy_time_integral=grad_integral,
    )


# ---------------------------------------------------------------------------
# report tables


def write_entropy_report(path, xis, phi_ids, residuals, tolerance) -> None:
    """Audit table: one row per (xi, phi); residuals shaped (n_phi, n_xi)."""
    residuals = np.asarray(residuals)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(ENTROPY_COLUMNS + "\n")
        for j, xi in enumerate(xis):
            for i, pid in enumerate(phi_ids):
                r = residuals[i, j]
                ok = 1 if r >= -tolerance else 0
                fh.write(f"{_fmt(xi)},{pid},{_fmt(r)},{ok}\n")


def write_kinetic_report(path, rows) -> None:
    """rows: iterable of (record, eps, xi, value); eps/xi may be None."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(KINETIC_COLUMNS + "\n")
        for record, eps, xi, value in rows:
            e = "" if eps is None else _fmt(eps)
            x = "" if xi is None else _fmt(xi)
            fh.write(f"{record},{e},{x},{_fmt(value)}\n")


def write_sweep_report(path, rows) -> None:
    """rows: per-nu dicts keyed by the SWEEP_COLUMNS names."""
    keys = SWEEP_COLUMNS.split(",")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(SWEEP_COLUMNS + "\n")
        for row in rows:
            cells = []
            for key in keys:
                v = row[key]
                cells.append(str(v) if isinstance(v, int) else _fmt(v))
            fh.write(",".join(cells) + "\n")


def write_distances(path, entries) -> None:
    """entries: iterable of (nu_i, nu_j, p, distance)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(DISTANCE_COLUMNS + "\n")
        for nu_i, nu_j, p, d in entries:
            fh.write(f"{_fmt(nu_i)},{_fmt(nu_j)},{p},{_fmt(d)}\n")


def write_layers(path, entries) -> None:
    """entries: iterable of (nu, face_group, depth, depth_over_nu, omega)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(LAYER_COLUMNS + "\n")
        for nu, group, depth, rel, omega in entries:
            fh.write(f"{_fmt(nu)},{group},{_fmt(depth)},{_fmt(rel)},{_fmt(omega)}\n")
