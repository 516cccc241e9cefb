"""Discovery and parsing of solver CSV output directories.

This package is a read-only consumer of the CSV contract: plain ASCII,
comma-separated, no quoting. Everything here re-reads those files from
scratch so the plotting side has no dependency on the solver package.
All parse errors name the offending file.
"""
from __future__ import annotations

import glob
import os
from dataclasses import dataclass

import numpy as np

SNAP_META = "t,nx,ny,lx,ly,nu,model"
SNAP_COLUMNS = "omega,h"
DISTANCE_COLUMNS = "nu_i,nu_j,p,distance"
LAYER_COLUMNS = "nu,face_group,depth,depth_over_nu,omega"
ENTROPY_COLUMNS = "xi,phi_id,residual,pass"


@dataclass
class Snapshot:
    """One output time of a run: cell-centered fields on an nx-by-ny grid."""

    t: float
    nx: int
    ny: int
    lx: float
    ly: float
    nu: float
    model_name: str
    omega: np.ndarray  # (nx, ny), first index along x
    h: np.ndarray


def read_snapshot(path: str) -> Snapshot:
    """Parse a snap_<t>.csv file: two header rows of metadata, a column row,
    then nx*ny rows of omega,h in row-major cell order."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header != SNAP_META:
                raise ValueError(f"bad metadata header {header!r}, expected {SNAP_META!r}")
            meta = fh.readline().strip().split(",")
            if len(meta) != 7:
                raise ValueError(f"metadata row has {len(meta)} entries, expected 7")
            columns = fh.readline().strip()
            if columns != SNAP_COLUMNS:
                raise ValueError(f"bad column row {columns!r}, expected {SNAP_COLUMNS!r}")
            body = fh.read()
        if not body.strip():
            raise ValueError("empty payload")
        t = float(meta[0])
        nx, ny = int(meta[1]), int(meta[2])
        lx, ly = float(meta[3]), float(meta[4])
        nu = float(meta[5])
        payload = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
        if payload.shape != (nx * ny, 2):
            raise ValueError(f"payload shape {payload.shape}, expected ({nx * ny}, 2)")
    except (OSError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None
    return Snapshot(
        t=t,
        nx=nx,
        ny=ny,
        lx=lx,
        ly=ly,
        nu=nu,
        model_name=meta[6],
        omega=payload[:, 0].reshape(nx, ny),
        h=payload[:, 1].reshape(nx, ny),
    )


def _read_table(path: str, expected_header: str, parse_row):
    """Shared reader for the small flat tables: header check, one parsed
    tuple per nonempty line."""
    rows = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header != expected_header:
                raise ValueError(f"bad header {header!r}, expected {expected_header!r}")
            for k, line in enumerate(fh):
                if not line.strip():
                    continue
                cells = line.strip().split(",")
                try:
                    rows.append(parse_row(cells))
                except (ValueError, IndexError):
                    raise ValueError(f"row {k + 2} is malformed: {line.strip()!r}") from None
    except (OSError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None
    return rows


def read_distances(path: str) -> list[tuple[float, float, float, float]]:
    """distances.csv rows: (nu_i, nu_j, p, distance)."""
    return _read_table(
        path,
        DISTANCE_COLUMNS,
        lambda c: (float(c[0]), float(c[1]), float(c[2]), float(c[3])),
    )


def read_layers(path: str) -> list[tuple[float, str, float, float, float]]:
    """layers.csv rows: (nu, face_group, depth, depth_over_nu, omega)."""
    return _read_table(
        path,
        LAYER_COLUMNS,
        lambda c: (float(c[0]), c[1], float(c[2]), float(c[3]), float(c[4])),
    )


def read_entropy(path: str) -> list[tuple[float, str, float, int]]:
    """entropy_report.csv rows: (xi, phi_id, residual, pass)."""
    return _read_table(
        path,
        ENTROPY_COLUMNS,
        lambda c: (float(c[0]), c[1], float(c[2]), int(c[3])),
    )


@dataclass
class ReportBundle:
    """Inventory of one input directory plus the output destination.

    snapshot_paths / entropy_paths are relative to in_dir and sorted, so the
    figure set derived from them is deterministic. Optional tables that are
    absent stay None; that only shrinks the figure list, it never fails.
    """

    in_dir: str
    out_dir: str
    fig_format: str
    snapshot_paths: list[str]
    distances_path: str | None
    layers_path: str | None
    entropy_paths: list[str]


def discover(in_dir: str, out_dir: str, fig_format: str = "png") -> ReportBundle:
    """Inventory a run or sweep directory.

    Snapshots are searched at the top level and one subdirectory down (the
    layout `sweep/run_nu_*/snap_*.csv` uses). At least one snapshot is
    required; distances.csv, layers.csv and entropy_report.csv are optional.
    """
    if fig_format not in ("png", "svg"):
        raise ValueError(f"unsupported figure format {fig_format!r}; expected png or svg")
    if not os.path.isdir(in_dir):
        raise FileNotFoundError(f"no snapshots in {in_dir}: not a directory")

    def rel(paths):
        return sorted(os.path.relpath(p, in_dir) for p in paths)

    snaps = rel(
        glob.glob(os.path.join(in_dir, "snap_*.csv"))
        + glob.glob(os.path.join(in_dir, "*", "snap_*.csv"))
    )
    if not snaps:
        raise FileNotFoundError(f"no snapshots in {in_dir}")

    def optional(name):
        p = os.path.join(in_dir, name)
        return name if os.path.isfile(p) else None

    entropy = rel(
        glob.glob(os.path.join(in_dir, "entropy_report.csv"))
        + glob.glob(os.path.join(in_dir, "*", "entropy_report.csv"))
    )
    return ReportBundle(
        in_dir=in_dir,
        out_dir=out_dir,
        fig_format=fig_format,
        snapshot_paths=snaps,
        distances_path=optional("distances.csv"),
        layers_path=optional("layers.csv"),
        entropy_paths=entropy,
    )
