"""Kinetic (level-set) view of the density: f(xi) = 1_{omega > xi}.

The density is recovered by integrating f over positive levels and 1 - f
over negative ones; the flux moment rho(xi) = xi f(xi) + int_xi^inf f ds
satisfies |rho - omega f| <= 2 R f (1 - f) for |omega| <= R, which is the
compactness handle the vanishing-viscosity argument rests on.  Level
integrals use the midpoint rule on an even number of levels with xi = 0 on
a cell edge, so indicator data reconstructs within one level spacing.

Averaged traces: the initial trace f0 averages f over an early time
window, the wall trace fG averages f along the inward normal.  For an
entropy-consistent limit both averages converge to indicators, so the
defect integrals int (f0 - f0^2) and the weighted wall analogue vanish;
they are reported as diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import nucleation_values, robin_coefficient
from .elliptic import normal_derivative, velocity
from .flux_models import FluxModel
from .geometry import EdgeValues, Grid, ScalarField, SIDES
from .transport import RunResult


@dataclass(frozen=True)
class KineticGrid:
    """Uniform level grid; levels sit at cell midpoints of [xi_min, xi_max]."""

    xi_min: float
    xi_max: float
    n_levels: int

    def __post_init__(self):
        if not self.xi_max > self.xi_min:
            raise ValueError("xi_max must exceed xi_min")
        if self.n_levels < 2:
            raise ValueError("need at least 2 levels")

    @property
    def spacing(self) -> float:
        return (self.xi_max - self.xi_min) / self.n_levels

    @property
    def levels(self) -> np.ndarray:
        return self.xi_min + (np.arange(self.n_levels) + 0.5) * self.spacing


def kinetic_grid_for(r_bound: float, n_levels: int = 128) -> KineticGrid:
    """Level grid covering [-R-1, R+1] with xi = 0 on a cell edge.

    n_levels is forced even so the midpoint levels avoid xi = 0 exactly;
    together with the symmetric range this keeps the sign split of the
    reconstruction clean.
    """
    if n_levels % 2:
        n_levels += 1
    r = float(abs(r_bound)) + 1.0
    return KineticGrid(-r, r, n_levels)


def chi(omega, xi):
    """f = 1 where omega > xi, else 0 (boundary case omega = xi gives 0)."""
    out = np.where(np.asarray(omega, dtype=float) > np.asarray(xi, dtype=float), 1.0, 0.0)
    return out if out.ndim else float(out)


def level_slices(kgrid: KineticGrid, omega_values: np.ndarray) -> np.ndarray:
    """f sampled at all levels: shape (n_levels,) + omega.shape."""
    om = np.asarray(omega_values, dtype=float)
    xi = kgrid.levels.reshape((-1,) + (1,) * om.ndim)
    return np.where(om[None, ...] > xi, 1.0, 0.0)


def reconstruct(kgrid: KineticGrid, omega_values: np.ndarray) -> np.ndarray:
    """Midpoint level integral int_0^inf f - int_-inf^0 (1 - f).

    Exact indicator data comes back within one level spacing provided the
    values lie inside the level range.
    """
    f = level_slices(kgrid, omega_values)
    pos = kgrid.levels > 0.0
    dxi = kgrid.spacing
    return dxi * (f[pos].sum(axis=0) - (1.0 - f[~pos]).sum(axis=0))


def rho_values(kgrid: KineticGrid, omega_values: np.ndarray) -> np.ndarray:
    """Flux moment rho(xi) = xi f(xi) + tail integral of f above xi.

    The tail uses half of the level's own cell plus all cells above
    (midpoint quadrature from the level upward); shape (n_levels,) + field.
    """
    f = level_slices(kgrid, omega_values)
    dxi = kgrid.spacing
    above = np.flip(np.cumsum(np.flip(f, axis=0), axis=0), axis=0) - f
    tail = dxi * (above + 0.5 * f)
    xi = kgrid.levels.reshape((-1,) + (1,) * (f.ndim - 1))
    return xi * f + tail


def defect(f_values: np.ndarray) -> np.ndarray:
    """F = f (1 - f); zero exactly on indicator data."""
    return f_values * (1.0 - f_values)


@dataclass
class RhoBoundReport:
    max_violation: float
    passed: bool


def rho_bound_check(kgrid: KineticGrid, omega_values: np.ndarray, r_bound: float) -> RhoBoundReport:
    """Verify |rho - omega f| <= 2 R f (1 - f) + spacing at every level/cell.

    The spacing slack absorbs the midpoint quadrature error of the tail;
    max_violation <= 0 means the bound holds everywhere.
    """
    om = np.asarray(omega_values, dtype=float)
    if float(np.max(np.abs(om), initial=0.0)) > r_bound:
        raise ValueError("r_bound must dominate sup|omega| for the moment bound")
    f = level_slices(kgrid, om)
    rho = rho_values(kgrid, om)
    gap = np.abs(rho - om[None, ...] * f) - 2.0 * r_bound * defect(f) - kgrid.spacing
    return RhoBoundReport(float(gap.max()), bool(gap.max() <= 0.0))


def trace_time_average(result: RunResult, kgrid: KineticGrid, eps: float) -> np.ndarray:
    """f0: mean of f over snapshots in the window [0, eps].

    Plain arithmetic mean over qualifying snapshots; at least two are
    required for the average to be a window statistic at all.
    """
    times = np.asarray(result.times)
    take = np.nonzero(times <= eps + 1e-12 * max(eps, 1.0))[0]
    if take.size < 2:
        raise ValueError(
            f"time-average window [0, {eps}] holds {take.size} snapshot(s); "
            f"need at least 2 (output interval too coarse)"
        )
    acc = np.zeros((kgrid.n_levels, result.grid.nx, result.grid.ny))
    for k in take:
        acc += level_slices(kgrid, result.omegas[k])
    return acc / take.size


@dataclass
class BoundaryTraces:
    """fG per side: arrays of shape (n_levels, n_times, side face count)."""

    eps: float
    depth_cells: dict[str, int]
    sides: dict[str, np.ndarray]


def _inward_lines(grid: Grid, omega: np.ndarray, side: str, m: int) -> np.ndarray:
    """omega on the first m cells along the inward normal: (m, faces)."""
    if side == "left":
        return omega[:m, :]
    if side == "right":
        return omega[::-1, :][:m, :]
    if side == "bottom":
        return omega[:, :m].T
    return omega[:, ::-1][:, :m].T


def trace_boundary_average(result: RunResult, kgrid: KineticGrid, eps: float) -> BoundaryTraces:
    """fG: mean of f over the first round(eps / spacing) cells inward.

    eps must span at least two cell layers on every side.
    """
    grid = result.grid
    sides_out: dict[str, np.ndarray] = {}
    depth_cells: dict[str, int] = {}
    for side in SIDES:
        delta = grid.dx if side in ("left", "right") else grid.dy
        m = int(round(eps / delta))
        if m < 2:
            raise ValueError(
                f"boundary window eps={eps} spans {m} cell(s) on side {side!r}; need >= 2"
            )
        m = min(m, grid.nx if side in ("left", "right") else grid.ny)
        depth_cells[side] = m
        nf = grid.side_face_count(side)
        out = np.empty((kgrid.n_levels, len(result.times), nf))
        for k, om in enumerate(result.omegas):
            lines = _inward_lines(grid, om, side, m)  # (m, faces)
            f = level_slices(kgrid, lines)  # (n_levels, m, faces)
            out[:, k, :] = f.mean(axis=1)
        sides_out[side] = out
    return BoundaryTraces(eps=eps, depth_cells=depth_cells, sides=sides_out)


def time_quadrature_weights(times) -> np.ndarray:
    """Slab weights: each snapshot owns the span to the midpoints of its
    neighbors (endpoint slabs clipped at 0 and t_final)."""
    t = np.asarray(times, dtype=float)
    if t.size == 1:
        return np.zeros(1)
    edges = np.concatenate([[t[0]], 0.5 * (t[1:] + t[:-1]), [t[-1]]])
    return np.diff(edges)


def snapshot_wall_velocity(result: RunResult, k: int) -> EdgeValues:
    """Outward v.n at boundary faces recomputed from the stored potential."""
    grid = result.grid
    trace = result.boundary.trace_a(grid, result.times[k])
    z = normal_derivative(ScalarField(grid, result.hs[k]), trace)
    return EdgeValues(left=-z.left, right=-z.right, bottom=-z.bottom, top=-z.top)


@dataclass
class Lemma3Report:
    interior: float
    boundary: float
    eps: float


def lemma3_functionals(
    result: RunResult, kgrid: KineticGrid, eps: float, model: FluxModel | None = None
) -> Lemma3Report:
    """Entropy-consistency defect functionals of the averaged traces.

    interior: int (f0 - f0^2) dxi dx over the domain,
    boundary: int |g'(xi) (v.n)|_minus (fG - fG^2) dxi dt dGamma,
    both nonnegative and vanishing on indicator traces.
    """
    model = model or result.model
    grid = result.grid
    dxi = kgrid.spacing

    f0 = trace_time_average(result, kgrid, eps)
    interior = float(np.sum(f0 - f0 * f0)) * dxi * grid.cell_area

    traces = trace_boundary_average(result, kgrid, eps)
    weights_t = time_quadrature_weights(result.times)
    gp = model.g_prime(kgrid.levels)  # (n_levels,)
    boundary = 0.0
    vn_cache = [snapshot_wall_velocity(result, k) for k in range(len(result.times))]
    for side in SIDES:
        face_len = grid.dy if side in ("left", "right") else grid.dx
        fg = traces.sides[side]  # (n_levels, n_times, faces)
        for k, wt in enumerate(weights_t):
            if wt == 0.0:
                continue
            vn = vn_cache[k].get(side)  # (faces,)
            weight = np.maximum(-(gp[:, None] * vn[None, :]), 0.0)  # |g'(xi) v.n|_-
            d = fg[:, k, :]
            boundary += wt * float(np.sum(weight * (d - d * d))) * dxi * face_len
    return Lemma3Report(interior=interior, boundary=boundary, eps=eps)


def snapshot_edges(result: RunResult, k: int):
    """(trace a, inflow b, outward v.n, Robin M) recomputed at snapshot k."""
    grid = result.grid
    t = result.times[k]
    trace = result.boundary.trace_a(grid, t)
    h = ScalarField(grid, result.hs[k])
    z = normal_derivative(h, trace)
    b = nucleation_values(result.boundary, grid, z, t)
    v = velocity(h, trace)
    v_out = EdgeValues(left=-z.left, right=-z.right, bottom=-z.bottom, top=-z.top)
    m = robin_coefficient(result.model, v)
    return trace, b, v_out, m


def kinetic_report_rows(result: RunResult, kgrid: KineticGrid | None = None, eps_list=None):
    """Rows for kinetic_report.csv: per-level occupation volumes, the
    reconstruction and moment-gap maxima, and the defect functionals for a
    shrinking sequence of averaging windows."""
    if kgrid is None:
        kgrid = kinetic_grid_for(result.sup_omega)
    grid = result.grid
    times = np.asarray(result.times)
    weights = time_quadrature_weights(times)
    span = float(weights.sum())

    rows = []
    volume = np.zeros(kgrid.n_levels)
    rec_err = 0.0
    gap = -np.inf
    r_bound = max(abs(kgrid.xi_min), abs(kgrid.xi_max)) - 1.0
    for k, w in enumerate(result.omegas):
        f = level_slices(kgrid, w)
        volume += weights[k] * f.sum(axis=(1, 2)) * grid.cell_area
        rec_err = max(rec_err, float(np.max(np.abs(reconstruct(kgrid, w) - w))))
        gap = max(gap, rho_bound_check(kgrid, w, r_bound).max_violation)
    volume /= span
    for xi, vol in zip(kgrid.levels, volume):
        rows.append(("level_volume", None, float(xi), float(vol)))
    rows.append(("reconstruction_max_error", None, None, rec_err))
    rows.append(("rho_gap_max", None, None, gap))

    if eps_list is None:
        if len(times) > 1:
            delta = float(times[1] - times[0])
            # every window must span >= 2 snapshots and >= 2 boundary cells
            floor = max(delta, 2.0 * max(grid.dx, grid.dy))
            raw = (max(m * delta, floor) for m in (16, 8, 4))
            eps_list = tuple(dict.fromkeys(raw))
        else:
            eps_list = ()
    for eps in eps_list:
        rep = lemma3_functionals(result, kgrid, eps)
        rows.append(("lemma3_interior", float(eps), None, rep.interior))
        rows.append(("lemma3_boundary", float(eps), None, rep.boundary))
    return rows
