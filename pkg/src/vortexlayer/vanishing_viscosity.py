"""Viscosity sweep: rerun one scenario for decreasing nu on nu-resolved
grids and measure how the solutions approach each other.

The grid rule dx = min(dx_max, nu/4) keeps the physical viscosity ahead of
the scheme's own numerical diffusion, which scales like dx |v|; without it
the small-nu limit would measure the discretization instead of the PDE.
There is no closed-form limit to compare against, so convergence is
assessed the honest way: pairwise L_p distances between runs, restricted
to the common coarsest grid, with a Cauchy verdict on the tail.
"""
from __future__ import annotations

import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import MAX_CELLS_PER_AXIS, RunConfig, parse_config, scenario
from .elliptic import SolverConvergenceError
from .geometry import Grid, SIDES
from .snapshots import write_layers, write_distances, write_run, write_sweep_report, load_run
from .transport import BlowUpError, RunResult, run

DEFAULT_NUS = tuple(0.1 * 2.0**-k for k in range(6))
ENV_THREADS = "VORTEXLAYER_THREADS"


@dataclass
class SweepConfig:
    scenario: str = "meanfield_nucleation"
    nus: tuple = DEFAULT_NUS
    dx_max: float = 0.1
    grid_divisor: float = 4.0
    p_list: tuple = (1, 2, 4)
    audit: bool = False
    kinetic: bool = False
    out_dir: str | None = None

    def base_config(self) -> RunConfig:
        return scenario(self.scenario) if isinstance(self.scenario, str) else self.scenario

    def validate(self) -> "SweepConfig":
        nus = tuple(float(v) for v in self.nus)
        if not nus:
            raise ValueError("nu list must not be empty")
        if any(v <= 0.0 for v in nus):
            raise ValueError(f"all nu values must be positive, got {nus}")
        if any(b >= a for a, b in zip(nus, nus[1:])):
            raise ValueError(f"nu values must be strictly decreasing, got {nus}")
        if self.dx_max <= 0.0 or self.grid_divisor <= 0.0:
            raise ValueError("dx_max and grid_divisor must be positive")
        if any(p <= 0 for p in self.p_list):
            raise ValueError(f"norm exponents must be positive, got {self.p_list}")
        base = self.base_config()
        for nu in nus:
            cfg = config_for_nu(base, nu, self.dx_max, self.grid_divisor)
            if max(cfg.nx, cfg.ny) > MAX_CELLS_PER_AXIS:
                raise ValueError(
                    f"grid rule needs {max(cfg.nx, cfg.ny)} cells per axis at nu={nu}, "
                    f"above the cap {MAX_CELLS_PER_AXIS}"
                )
        return self


def config_for_nu(base: RunConfig, nu: float, dx_max: float = 0.1, divisor: float = 4.0) -> RunConfig:
    """Apply the nu-resolved grid rule to a scenario config."""
    dx = min(dx_max, nu / divisor)
    nx = max(2, round(base.lx / dx))
    ny = max(2, round(base.ly / dx))
    return replace(base, nu=float(nu), nx=nx, ny=ny)


def run_config(cfg: RunConfig) -> RunResult:
    """Execute one configured run in-process."""
    return run(
        cfg.grid(),
        cfg.flux_model(),
        cfg.nu,
        cfg.boundary(),
        cfg.initial_condition(),
        t_final=cfg.t_final,
        cfl=cfg.cfl,
        output_interval=cfg.output_interval,
        store_gradients=cfg.store_gradients,
    )


def _sweep_worker(args):
    # child process: execute one nu and persist it; the parent reloads
    text, run_dir = args
    cfg = parse_config(text)
    result = run_config(cfg)
    write_run(run_dir, result, cfg)
    return run_dir


# ---------------------------------------------------------------------------
# grid restriction and distances


def restrict_to_common_grid(fine: np.ndarray, fine_grid: Grid, coarse_grid: Grid) -> np.ndarray:
    """Cell-average restriction onto a coarser nested grid; exactly
    mass-preserving because it only regroups the same cell sums."""
    if (fine_grid.lx, fine_grid.ly) != (coarse_grid.lx, coarse_grid.ly):
        raise ValueError("grids cover different rectangles")
    if fine_grid.nx % coarse_grid.nx or fine_grid.ny % coarse_grid.ny:
        raise ValueError(
            f"grid {fine_grid.nx}x{fine_grid.ny} is not a refinement of "
            f"{coarse_grid.nx}x{coarse_grid.ny}"
        )
    mx = fine_grid.nx // coarse_grid.nx
    my = fine_grid.ny // coarse_grid.ny
    blocks = fine.reshape(coarse_grid.nx, mx, coarse_grid.ny, my)
    return blocks.mean(axis=(1, 3))


def _common_time_indices(times_list, t_final):
    """Indices of output times shared by every run (matched within roundoff)."""
    tol = 1e-9 * max(1.0, abs(t_final))
    ref = times_list[0]
    out = []
    for t in ref:
        idx = [0] * len(times_list)
        ok = True
        for r, times in enumerate(times_list):
            arr = np.asarray(times)
            j = int(np.argmin(np.abs(arr - t)))
            if abs(arr[j] - t) > tol:
                ok = False
                break
            idx[r] = j
        if ok:
            out.append(idx)
    return out


def pairwise_distance(res_i: RunResult, res_j: RunResult, coarse: Grid, p: float, index_pairs) -> float:
    """max over shared output times of the L_p distance on the coarse grid."""
    area = coarse.cell_area
    worst = 0.0
    for ki, kj in index_pairs:
        wi = restrict_to_common_grid(res_i.omegas[ki], res_i.grid, coarse)
        wj = restrict_to_common_grid(res_j.omegas[kj], res_j.grid, coarse)
        diff = np.abs(wi - wj)
        dist = float((np.sum(diff**p) * area) ** (1.0 / p))
        worst = max(worst, dist)
    return worst


def layer_profile(result: RunResult, sides=SIDES, depth_count: int | None = None):
    """Final-snapshot density along inward normals, averaged over each side.

    Row j holds the cells j layers in from the wall, tabulated against the
    absolute depth j*dx and the viscosity-scaled depth j*dx/nu.
    """
    grid = result.grid
    omega = result.omegas[-1]
    half = {"left": grid.nx // 2, "right": grid.nx // 2, "bottom": grid.ny // 2, "top": grid.ny // 2}
    rows = []
    for side in sides:
        step = grid.dx if side in ("left", "right") else grid.dy
        count = depth_count if depth_count is not None else half[side]
        if count > half[side]:
            raise ValueError(
                f"depth_count {count} exceeds the domain half-width ({half[side]} cells) on {side}"
            )
        for j in range(count):
            if side == "left":
                val = float(omega[j, :].mean())
            elif side == "right":
                val = float(omega[grid.nx - 1 - j, :].mean())
            elif side == "bottom":
                val = float(omega[:, j].mean())
            else:
                val = float(omega[:, grid.ny - 1 - j].mean())
            depth = j * step
            rows.append((result.nu, side, depth, depth / result.nu, val))
    return rows


# ---------------------------------------------------------------------------
# the sweep


@dataclass
class SweepReport:
    config: SweepConfig
    nus: tuple
    results: list  # RunResult or None per nu
    errors: dict  # nu -> message
    bound_rows: list
    distance_entries: list  # (nu_i, nu_j, p, distance) long format
    cauchy: dict  # p -> bool
    layer_rows: list
    run_dirs: list

    def distance(self, i: int, j: int, p) -> float:
        for nu_i, nu_j, pp, d in self.distance_entries:
            if pp == p and {nu_i, nu_j} == {self.nus[i], self.nus[j]}:
                return d
        raise KeyError((i, j, p))

    @property
    def consecutive(self) -> dict:
        """p -> list of D[k][k+1] over successful consecutive pairs."""
        out = {}
        for p in self.config.p_list:
            vals = []
            for k in range(len(self.nus) - 1):
                if self.results[k] is None or self.results[k + 1] is None:
                    continue
                vals.append(self.distance(k, k + 1, p))
            out[p] = vals
        return out


def _worker_count(n_jobs: int) -> int:
    raw = os.environ.get(ENV_THREADS, "")
    try:
        cap = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}")
    return max(1, min(n_jobs, cap))


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """One transport run per nu, then bounds, distances, verdict, layers.

    Per-nu runs are independent; a failing nu only blanks its own rows.
    Worker parallelism is capped by the VORTEXLAYER_THREADS variable.
    """
    cfg = cfg.validate()
    base = cfg.base_config()
    nus = tuple(float(v) for v in cfg.nus)
    configs = [config_for_nu(base, nu, cfg.dx_max, cfg.grid_divisor) for nu in nus]

    run_dirs = []
    if cfg.out_dir is not None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        run_dirs = [os.path.join(cfg.out_dir, f"run_nu_{nu:.6g}") for nu in nus]

    results: list = [None] * len(nus)
    errors: dict = {}
    workers = _worker_count(len(nus))
    if workers > 1:
        # persist from the workers, reload in the parent
        from .config import canonical_text

        tmp = None
        if not run_dirs:
            tmp = tempfile.mkdtemp(prefix="vortexlayer_sweep_")
            run_dirs = [os.path.join(tmp, f"run_nu_{nu:.6g}") for nu in nus]
        jobs = [(canonical_text(c), d) for c, d in zip(configs, run_dirs)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_worker, j) for j in jobs]
            for k, fut in enumerate(futures):
                try:
                    results[k] = load_run(fut.result())
                except (BlowUpError, SolverConvergenceError, ValueError) as exc:
                    errors[nus[k]] = str(exc)
    else:
        for k, c in enumerate(configs):
            try:
                results[k] = run_config(c)
                if run_dirs:
                    write_run(run_dirs[k], results[k], c)
            except (BlowUpError, SolverConvergenceError) as exc:
                errors[nus[k]] = str(exc)

    bound_rows = []
    layer_rows = []
    for k, res in enumerate(results):
        if res is None:
            continue
        reports = res.reports
        mass0 = float(np.sum(res.omegas[0])) * res.grid.cell_area
        mass1 = float(np.sum(res.omegas[-1])) * res.grid.cell_area
        bound_rows.append(
            {
                "nu": nus[k],
                "nx": res.grid.nx,
                "ny": res.grid.ny,
                "steps": len(reports),
                "sup_omega": res.sup_omega,
                "sqrt_nu_grad_l2": res.sqrt_nu_grad_l2,
                "mass_initial": mass0,
                "mass_final": mass1,
                "max_mass_error": max((abs(r.mass_identity_error) / r.mass_scale for r in reports), default=0.0),
                "robin_max": max((r.robin_m for r in reports), default=0.0),
            }
        )
        layer_rows.extend(layer_profile(res))

    # distances on the coarsest successful grid
    ok = [k for k, r in enumerate(results) if r is not None]
    distance_entries = []
    if len(ok) >= 2:
        coarse = min((results[k].grid for k in ok), key=lambda g: g.nx * g.ny)
        times_list = [results[k].times for k in ok]
        shared = _common_time_indices(times_list, base.t_final)
        for a in range(len(ok)):
            for b in range(a + 1, len(ok)):
                i, j = ok[a], ok[b]
                pairs = [(row[a], row[b]) for row in shared]
                for p in cfg.p_list:
                    d = pairwise_distance(results[i], results[j], coarse, p, pairs)
                    distance_entries.append((nus[i], nus[j], p, d))

    report = SweepReport(
        config=cfg,
        nus=nus,
        results=results,
        errors=errors,
        bound_rows=bound_rows,
        distance_entries=distance_entries,
        cauchy={},
        layer_rows=layer_rows,
        run_dirs=run_dirs,
    )
    for p in cfg.p_list:
        tail = report.consecutive[p][-3:]
        slack = 1e-12
        report.cauchy[p] = all(
            tail[m + 1] <= tail[m] * (1.0 + slack) + slack for m in range(len(tail) - 1)
        )
    return report


def write_sweep_outputs(report: SweepReport, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_sweep_report(os.path.join(out_dir, "sweep_report.csv"), report.bound_rows)
    write_distances(os.path.join(out_dir, "distances.csv"), report.distance_entries)
    write_layers(os.path.join(out_dir, "layers.csv"), report.layer_rows)
