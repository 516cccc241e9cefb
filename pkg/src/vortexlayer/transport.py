"""Explicit finite-volume transport of the density omega.

Semi-discrete form: conservative update with local Lax-Friedrichs advective
fluxes g(omega) v.n, two-point diffusive fluxes nu grad(omega), and on the
boundary an upwinded advective flux (exterior state = inflow density b on
inflow faces, owner value on outflow faces) plus the Robin diffusive flux
M (omega - b).  The drift v, the Robin coefficient M and the inflow values
b are frozen over each step at the step's starting time.

Face fluxes are oriented along +x / +y; index i of fx is the face between
cells i-1 and i, with i = 0 and i = nx the physical boundary faces.  All
stencils are differences of differences, so a constant state with matching
constant trace advances with exactly zero flux (bitwise steady state).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryData, inflow_indicator, nucleation_values, robin_coefficient
from .elliptic import normal_derivative, solve_screened_poisson, velocity
from .flux_models import FluxModel
from .geometry import EdgeValues, Grid, ScalarField, SIDES, VectorField

BLOWUP_THRESHOLD = 1e6
EPS_DT = 1e-30


class BlowUpError(RuntimeError):
    """The density left the trusted range; carries the failure time."""

    def __init__(self, t: float, step_index: int, max_abs: float):
        self.t = t
        self.step_index = step_index
        self.max_abs = max_abs
        super().__init__(
            f"density blow-up guard tripped at t={t:.6g} (step {step_index}): "
            f"max|omega| = {max_abs:.3e}"
        )


def numerical_face_flux(model: FluxModel, omega_left, omega_right, v_n):
    """Local Lax-Friedrichs flux for g(omega) v.n across one face.

    F = (g(wL) + g(wR)) v_n / 2 - K |v_n| (wR - wL) / 2, with the dissipation
    coefficient K |v_n| chosen so the flux is monotone (nondecreasing in the
    left state, nonincreasing in the right) for any |g'| <= K.
    """
    wl = np.asarray(omega_left, dtype=float)
    wr = np.asarray(omega_right, dtype=float)
    vn = np.asarray(v_n, dtype=float)
    out = 0.5 * (model.g(wl) + model.g(wr)) * vn - 0.5 * model.lipschitz * np.abs(vn) * (wr - wl)
    return out if out.ndim else float(out)


def robin_diffusive_flux(m_coeff: float, omega_face, b_val):
    """Outward diffusive transport through a boundary face: +M (omega - b)."""
    out = m_coeff * (np.asarray(omega_face, dtype=float) - np.asarray(b_val, dtype=float))
    return out if out.ndim else float(out)


def stable_dt(
    grid: Grid, model: FluxModel, v: VectorField, nu: float, m_coeff: float, cfl: float
) -> float:
    """Explicit step size: cfl times the tightest of the advective, diffusive
    and Robin constraints (1e-30 guards the zero-speed denominators)."""
    h = min(grid.dx, grid.dy)
    k = model.lipschitz
    vmax = v.max_norm()
    return cfl * min(
        h / (2.0 * k * vmax + EPS_DT),
        h * h / (4.0 * nu + EPS_DT),
        h / (2.0 * m_coeff + EPS_DT),
    )


def cell_gradient(grid: Grid, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered gradient: central inside, second-order one-sided at the
    walls (no exterior data).  Exactly zero for constants."""
    gx = np.empty_like(values)
    gy = np.empty_like(values)
    gx[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2.0 * grid.dx)
    gy[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * grid.dy)
    gx[0, :] = (4.0 * (values[1, :] - values[0, :]) - (values[2, :] - values[0, :])) / (2.0 * grid.dx)
    gx[-1, :] = -(4.0 * (values[-2, :] - values[-1, :]) - (values[-3, :] - values[-1, :])) / (2.0 * grid.dx)
    gy[:, 0] = (4.0 * (values[:, 1] - values[:, 0]) - (values[:, 2] - values[:, 0])) / (2.0 * grid.dy)
    gy[:, -1] = -(4.0 * (values[:, -2] - values[:, -1]) - (values[:, -3] - values[:, -1])) / (2.0 * grid.dy)
    return gx, gy


def face_gradient_energy(grid: Grid, values: np.ndarray) -> float:
    """Discrete Dirichlet energy int |grad omega|^2 from interior face
    differences (the quantity damped by the explicit diffusion update)."""
    ddx = (values[1:, :] - values[:-1, :]) / grid.dx
    ddy = (values[:, 1:] - values[:, :-1]) / grid.dy
    return float(np.sum(ddx * ddx) + np.sum(ddy * ddy)) * grid.cell_area


@dataclass
class State:
    """Density plus every derived field frozen at time t.

    h solves the screened Poisson problem for omega with trace a(t); v, M,
    the wall normal derivative z and the inflow values b all derive from h.
    """

    grid: Grid
    model: FluxModel
    nu: float
    boundary: BoundaryData
    t: float
    omega: ScalarField
    h: ScalarField
    v: VectorField
    trace: EdgeValues
    z_edges: EdgeValues
    b_edges: EdgeValues
    m_coeff: float


def make_state(
    grid: Grid,
    model: FluxModel,
    nu: float,
    boundary: BoundaryData,
    omega_values: np.ndarray,
    t: float,
    h_guess: np.ndarray | None = None,
) -> State:
    """Complete a density into a State by re-solving the elliptic problem."""
    omega_values = np.asarray(omega_values, dtype=float)
    trace = boundary.trace_a(grid, t)
    # the density itself is the natural first guess: for an equilibrium
    # constant state the initial residual is bitwise zero and the solve
    # returns immediately, which keeps such states exactly steady
    if h_guess is None:
        h_guess = omega_values
    h = solve_screened_poisson(grid, omega_values, trace, guess=h_guess)
    v = velocity(h, trace)
    z = normal_derivative(h, trace)
    b = nucleation_values(boundary, grid, z, t)
    m = robin_coefficient(model, v)
    return State(
        grid=grid,
        model=model,
        nu=float(nu),
        boundary=boundary,
        t=float(t),
        omega=ScalarField(grid, omega_values),
        h=h,
        v=v,
        trace=trace,
        z_edges=z,
        b_edges=b,
        m_coeff=m,
    )


def outward_normal_velocity(state: State) -> EdgeValues:
    """v.n at boundary faces; equals -dh/dn there."""
    return EdgeValues(
        left=-state.z_edges.left,
        right=-state.z_edges.right,
        bottom=-state.z_edges.bottom,
        top=-state.z_edges.top,
    )


def assemble_fluxes(
    grid: Grid,
    model: FluxModel,
    nu: float,
    omega: np.ndarray,
    v: VectorField,
    m_coeff: float,
    b_edges: EdgeValues,
    v_out_edges: EdgeValues,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Total face fluxes plus boundary flux tallies.

    Returns (fx, fy, adv_out, diff_out): fx has shape (nx+1, ny), fy has
    (nx, ny+1), both oriented +x/+y; adv_out and diff_out are the outward
    boundary advective / diffusive flux integrals (per unit time).
    """
    k = model.lipschitz
    g = model.g(omega)
    fx = np.empty((grid.nx + 1, grid.ny))
    fy = np.empty((grid.nx, grid.ny + 1))

    vn_x = 0.5 * (v.x[:-1, :] + v.x[1:, :])
    dw_x = omega[1:, :] - omega[:-1, :]
    fx[1:-1, :] = (
        0.5 * (g[:-1, :] + g[1:, :]) * vn_x
        - 0.5 * k * np.abs(vn_x) * dw_x
        - nu * dw_x / grid.dx
    )
    vn_y = 0.5 * (v.y[:, :-1] + v.y[:, 1:])
    dw_y = omega[:, 1:] - omega[:, :-1]
    fy[:, 1:-1] = (
        0.5 * (g[:, :-1] + g[:, 1:]) * vn_y
        - 0.5 * k * np.abs(vn_y) * dw_y
        - nu * dw_y / grid.dy
    )

    adv_out = 0.0
    diff_out = 0.0
    for side in SIDES:
        if side == "left":
            w_own, face_len = omega[0, :], grid.dy
        elif side == "right":
            w_own, face_len = omega[-1, :], grid.dy
        elif side == "bottom":
            w_own, face_len = omega[:, 0], grid.dx
        else:
            w_own, face_len = omega[:, -1], grid.dx
        v_out = v_out_edges.get(side)
        b = b_edges.get(side)
        inflow = inflow_indicator(model, w_own, v_out)
        w_ext = np.where(inflow, b, w_own)
        adv = numerical_face_flux(model, w_own, w_ext, v_out)
        dif = robin_diffusive_flux(m_coeff, w_own, b)
        adv_out += float(np.sum(adv)) * face_len
        diff_out += float(np.sum(dif)) * face_len
        total = adv + dif
        if side == "left":
            fx[0, :] = -total
        elif side == "right":
            fx[-1, :] = total
        elif side == "bottom":
            fy[:, 0] = -total
        else:
            fy[:, -1] = total
    return fx, fy, adv_out, diff_out


def apply_fluxes(grid: Grid, omega: np.ndarray, fx: np.ndarray, fy: np.ndarray, dt: float) -> np.ndarray:
    """Conservative update omega - dt div(F)."""
    div = (fx[1:, :] - fx[:-1, :]) / grid.dx + (fy[:, 1:] - fy[:, :-1]) / grid.dy
    return omega - dt * div


@dataclass
class StepReport:
    """Per-step bookkeeping used by the monitors and the conservation checks."""

    step_index: int
    t: float
    dt: float
    mass_before: float
    mass_after: float
    boundary_advective_outflux: float
    boundary_diffusive_outflux: float
    omega_min: float
    omega_max: float
    mass_identity_error: float
    robin_m: float
    grad_energy: float
    energy_residual: float

    @property
    def mass_scale(self) -> float:
        return max(
            abs(self.mass_before),
            abs(self.mass_after),
            self.dt * (abs(self.boundary_advective_outflux) + abs(self.boundary_diffusive_outflux)),
            1e-30,
        )


def _energy_residual(
    grid: Grid,
    model: FluxModel,
    nu: float,
    state: State,
    omega_new: np.ndarray,
    dt: float,
    v_out: EdgeValues,
    grad_energy: float,
) -> float:
    """Residual of the discrete k=2 energy identity (diagnostic only):

    d/dt int w^2 + 2 nu int |grad w|^2 + robin + boundary advective
    + interior coupling ~ 0 at order dt + dx on smooth runs.
    """
    w = state.omega.values
    area = grid.cell_area
    e_before = float(np.sum(w * w)) * area
    e_after = float(np.sum(omega_new * omega_new)) * area
    coupling = float(np.sum(model.big_g2(w) * (w - state.h.values))) * area
    robin = 0.0
    adv = 0.0
    for side in SIDES:
        if side == "left":
            w_own, face_len = w[0, :], grid.dy
        elif side == "right":
            w_own, face_len = w[-1, :], grid.dy
        elif side == "bottom":
            w_own, face_len = w[:, 0], grid.dx
        else:
            w_own, face_len = w[:, -1], grid.dx
        b = state.b_edges.get(side)
        robin += float(np.sum(2.0 * w_own * state.m_coeff * (w_own - b))) * face_len
        adv += float(
            np.sum((2.0 * w_own * model.g(w_own) - model.big_g2(w_own)) * v_out.get(side))
        ) * face_len
    return (e_after - e_before) / dt + 2.0 * nu * grad_energy + robin + adv + coupling


def step(state: State, dt: float) -> tuple[State, StepReport]:
    """One explicit step of size dt from state.t; returns the refreshed state
    (elliptic problem re-solved at t + dt) and the step report."""
    if not dt > 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    grid = state.grid
    w = state.omega.values
    v_out = outward_normal_velocity(state)
    fx, fy, adv_out, diff_out = assemble_fluxes(
        grid, state.model, state.nu, w, state.v, state.m_coeff, state.b_edges, v_out
    )
    w_new = apply_fluxes(grid, w, fx, fy, dt)

    mass_before = float(np.sum(w)) * grid.cell_area
    mass_after = float(np.sum(w_new)) * grid.cell_area
    mass_err = mass_after - mass_before + dt * (adv_out + diff_out)
    grad_energy = face_gradient_energy(grid, w)
    energy_res = _energy_residual(
        grid, state.model, state.nu, state, w_new, dt, v_out, grad_energy
    )

    max_abs = float(np.max(np.abs(w_new))) if w_new.size else 0.0
    if not np.isfinite(max_abs) or max_abs > BLOWUP_THRESHOLD:
        raise BlowUpError(state.t + dt, -1, max_abs)

    new_state = make_state(
        grid, state.model, state.nu, state.boundary, w_new, state.t + dt, h_guess=state.h.values
    )
    report = StepReport(
        step_index=-1,
        t=state.t,
        dt=dt,
        mass_before=mass_before,
        mass_after=mass_after,
        boundary_advective_outflux=adv_out,
        boundary_diffusive_outflux=diff_out,
        omega_min=float(w_new.min()),
        omega_max=float(w_new.max()),
        mass_identity_error=mass_err,
        robin_m=state.m_coeff,
        grad_energy=grad_energy,
        energy_residual=energy_res,
    )
    return new_state, report


def periodic_strip_update(
    model: FluxModel, omega_row: np.ndarray, v: float, nu: float, dt: float, dx: float
) -> np.ndarray:
    """One update on a 1D periodic strip with frozen uniform velocity.

    Same flux formulas as the 2D interior; used to cross-check the scheme
    against a plain upwind reference.
    """
    w = np.asarray(omega_row, dtype=float)
    wr = np.roll(w, -1)
    f = numerical_face_flux(model, w, wr, float(v)) - nu * (wr - w) / dx
    return w - dt * (f - np.roll(f, 1)) / dx


@dataclass
class RunResult:
    """Trajectory snapshots plus per-step monitors for one viscous run."""

    grid: Grid
    model: FluxModel
    nu: float
    boundary: BoundaryData
    times: list[float]
    omegas: list[np.ndarray]
    hs: list[np.ndarray]
    gradients: list[tuple[np.ndarray, np.ndarray]] | None
    reports: list[StepReport]
    sup_omega: float
    grad_energy_time_integral: float

    @property
    def sqrt_nu_grad_l2(self) -> float:
        """sqrt(nu) * ||grad omega||_{L2 in space-time}, the viscous energy bound."""
        return float(np.sqrt(self.nu * max(self.grad_energy_time_integral, 0.0)))


def run(
    grid: Grid,
    model: FluxModel,
    nu: float,
    boundary: BoundaryData,
    omega0: np.ndarray,
    t_final: float,
    cfl: float,
    output_interval: float,
    store_gradients: bool = False,
    max_steps: int = 10_000_000,
) -> RunResult:
    """Advance from omega0 to t_final, snapshotting every output_interval.

    Snapshots always include t = 0 and t = t_final; the step size is the
    stability bound clipped so output times are hit exactly.
    """
    if t_final < 0.0:
        raise ValueError(f"t_final must be nonnegative, got {t_final}")
    if not (0.0 < cfl <= 1.0):
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    if t_final > 0.0 and not output_interval > 0.0:
        raise ValueError(f"output interval must be positive, got {output_interval}")

    state = make_state(grid, model, nu, boundary, omega0, 0.0)
    times = [0.0]
    omegas = [state.omega.values.copy()]
    hs = [state.h.values.copy()]
    gradients = [cell_gradient(grid, state.omega.values)] if store_gradients else None
    reports: list[StepReport] = []
    sup_omega = float(np.max(np.abs(state.omega.values)))
    grad_time_integral = 0.0

    if t_final == 0.0:
        return RunResult(
            grid, model, nu, boundary, times, omegas, hs, gradients, reports,
            sup_omega, grad_time_integral,
        )

    n_out = max(1, int(round(t_final / output_interval)))
    out_times = [min(k * output_interval, t_final) for k in range(1, n_out + 1)]
    out_times[-1] = t_final

    t = 0.0
    step_index = 0
    time_tol = 1e-12 * max(t_final, 1.0)
    for target in out_times:
        while t < target - time_tol:
            dt = stable_dt(grid, model, state.v, nu, state.m_coeff, cfl)
            dt = min(dt, target - t)
            state, report = step(state, dt)
            report.step_index = step_index
            reports.append(report)
            grad_time_integral += dt * report.grad_energy
            sup_omega = max(sup_omega, float(np.max(np.abs(state.omega.values))))
            t = state.t
            step_index += 1
            if step_index >= max_steps:
                raise RuntimeError(f"exceeded max_steps = {max_steps} before t_final")
        times.append(target)
        omegas.append(state.omega.values.copy())
        hs.append(state.h.values.copy())
        if store_gradients:
            gradients.append(cell_gradient(grid, state.omega.values))

    return RunResult(
        grid, model, nu, boundary, times, omegas, hs, gradients, reports,
        sup_omega, grad_time_integral,
    )
