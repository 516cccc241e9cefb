"""Figure rendering and the report manifest.

Figures are drawn from the CSV values as read; nothing is recomputed from
the model. Every file lands via write-to-temp + rename so a crash never
leaves a half-written figure, and the manifest is only written after every
figure is in place.
"""
from __future__ import annotations

import hashlib
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .inventory import (  # noqa: E402
    ReportBundle,
    discover,
    read_distances,
    read_entropy,
    read_layers,
    read_snapshot,
)

# fixed salt so SVG element ids do not change between runs
plt.rcParams["svg.hashsalt"] = "report-plots"

MANIFEST_COLUMNS = "figure,source,sha256"
_COLORS = plt.get_cmap("tab10").colors


def _fig_name(prefix: str, rel_source: str, fmt: str) -> str:
    stem = rel_source[:-4] if rel_source.endswith(".csv") else rel_source
    flat = stem.replace(os.sep, "_").replace("/", "_")
    return f"{prefix}{flat}.{fmt}"


def _atomic_savefig(fig, path: str, fmt: str) -> None:
    tmp = path + ".tmp"
    kwargs = {"metadata": {"Date": None}} if fmt == "svg" else {}
    try:
        fig.savefig(tmp, format=fmt, dpi=150, **kwargs)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    finally:
        plt.close(fig)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _render_heatmap(snap, path: str, fmt: str) -> None:
    """Side-by-side cell maps of the density and the potential, axes in
    domain coordinates."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), constrained_layout=True)
    extent = (0.0, snap.lx, 0.0, snap.ly)
    for ax, field, label in ((axes[0], snap.omega, "omega"), (axes[1], snap.h, "h")):
        # fields are indexed [ix, iy]; transpose so x runs horizontally
        im = ax.imshow(field.T, origin="lower", extent=extent, cmap="viridis", aspect="equal")
        ax.set_title(label)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(f"{snap.model_name}, nu = {snap.nu:g}, t = {snap.t:.6f}")
    _atomic_savefig(fig, path, fmt)


def _render_distances(entries, path: str, fmt: str) -> None:
    """Log-log distance versus viscosity, one line per exponent p, through
    the consecutive pairs of the descending viscosity ladder."""
    nus = sorted({e[0] for e in entries} | {e[1] for e in entries}, reverse=True)
    pairs = [frozenset(pair) for pair in zip(nus, nus[1:])]
    fig, ax = plt.subplots(figsize=(6.0, 4.5), constrained_layout=True)
    for k, p in enumerate(sorted({e[2] for e in entries})):
        lookup = {frozenset((ni, nj)): d for ni, nj, pp, d in entries if pp == p}
        xs = [min(pair) for pair in pairs if pair in lookup]
        ys = [lookup[pair] for pair in pairs if pair in lookup]
        ax.loglog(xs, ys, marker="o", color=_COLORS[k % 10], label=f"p = {p:g}")
    ax.set_xlabel("viscosity nu (finer member of the pair)")
    ax.set_ylabel("restricted L^p distance of final snapshots")
    ax.set_title("consecutive-refinement distances")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _atomic_savefig(fig, path, fmt)


def _render_layers(rows, path: str, fmt: str) -> None:
    """Wall-layer profiles against viscosity-scaled depth, overlaid per
    viscosity; one faint line per wall side, colored by viscosity."""
    nus = sorted({r[0] for r in rows}, reverse=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.5), constrained_layout=True)
    for k, nu in enumerate(nus):
        color = _COLORS[k % 10]
        first = True
        for side in sorted({r[1] for r in rows if r[0] == nu}):
            pts = [(r[3], r[4]) for r in rows if r[0] == nu and r[1] == side]
            pts.sort()
            ax.plot(
                [q[0] for q in pts],
                [q[1] for q in pts],
                color=color,
                alpha=0.85,
                linewidth=1.2,
                label=f"nu = {nu:g}" if first else None,
            )
            first = False
    ax.set_xlabel("depth / nu")
    ax.set_ylabel("side-averaged omega at final time")
    ax.set_title("boundary layer profiles")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _atomic_savefig(fig, path, fmt)


def _render_entropy(rows, rel_source: str, path: str, fmt: str) -> None:
    """Worst residual per test function; anything below zero by more than
    the audit floor was already flagged in the CSV's pass column."""
    order: dict[str, int] = {}
    for _, pid, _, _ in rows:
        order.setdefault(pid, len(order))
    mins = [min(r[2] for r in rows if r[1] == pid) for pid in order]
    flagged = {pid for _, pid, _, ok in rows if not ok}
    colors = ["crimson" if pid in flagged else "steelblue" for pid in order]
    fig, ax = plt.subplots(figsize=(7.0, 4.0), constrained_layout=True)
    ax.scatter(range(len(order)), mins, c=colors, s=18)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("test function index")
    ax.set_ylabel("min residual over levels")
    ax.set_title(rel_source)
    ax.grid(True, alpha=0.3)
    _atomic_savefig(fig, path, fmt)


def render_bundle(bundle: ReportBundle) -> list[tuple[str, str, str]]:
    """Render every figure the inventory supports and write manifest.csv.

    Returns the manifest rows (figure, source csv, sha256), sorted by
    figure name. Optional tables with no data rows are skipped silently.
    """
    os.makedirs(bundle.out_dir, exist_ok=True)
    fmt = bundle.fig_format
    rows: list[tuple[str, str, str]] = []

    def emit(name, rel_source, render):
        path = os.path.join(bundle.out_dir, name)
        render(path)
        rows.append((name, rel_source, _sha256(path)))

    for rel in bundle.snapshot_paths:
        snap = read_snapshot(os.path.join(bundle.in_dir, rel))
        emit(_fig_name("heatmap_", rel, fmt), rel, lambda p, s=snap: _render_heatmap(s, p, fmt))

    if bundle.distances_path is not None:
        entries = read_distances(os.path.join(bundle.in_dir, bundle.distances_path))
        if entries:
            emit(
                _fig_name("", bundle.distances_path, fmt),
                bundle.distances_path,
                lambda p: _render_distances(entries, p, fmt),
            )

    if bundle.layers_path is not None:
        layer_rows = read_layers(os.path.join(bundle.in_dir, bundle.layers_path))
        if layer_rows:
            emit(
                _fig_name("", bundle.layers_path, fmt),
                bundle.layers_path,
                lambda p: _render_layers(layer_rows, p, fmt),
            )

    for rel in bundle.entropy_paths:
        erows = read_entropy(os.path.join(bundle.in_dir, rel))
        if erows:
            emit(_fig_name("", rel, fmt), rel, lambda p, r=erows, s=rel: _render_entropy(r, s, p, fmt))

    rows.sort()
    manifest = os.path.join(bundle.out_dir, "manifest.csv")
    tmp = manifest + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MANIFEST_COLUMNS + "\n")
        for name, source, digest in rows:
            fh.write(f"{name},{source},{digest}\n")
    os.replace(tmp, manifest)
    return rows


def make_report(in_dir: str, out_dir: str, fig_format: str = "png") -> list[tuple[str, str, str]]:
    """Inventory in_dir, render all figures into out_dir, return the manifest."""
    return render_bundle(discover(in_dir, out_dir, fig_format))
