"""A-posteriori entropy audits of stored trajectories.

Every audit quadratures an entropy balance over the snapshots: space by
the midpoint rule on cells (and face midpoints on the wall), time by
splitting [0, T] into slabs owned by each snapshot.  Test functions carry
closed-form time antiderivatives, so the time integrals over each slab are
exact; in particular the phi_t term telescopes exactly against the initial
term on constant states, and residuals there drop to roundoff.

Audited balances, for entropy level xi and test function phi >= 0 with
phi(T) = 0:

* kruzkov: the weak entropy inequality of the limit problem with the full
  Kruzkov pair, the coupling term sign(w - xi) g(xi) (h - w) phi, and the
  wall term M |b - xi| phi weighted by the trajectory-global M.  The
  viscous term is dropped, so for finite nu the residual may dip below
  zero by O(sqrt(nu)) plus discretization error.
* plus / minus: the one-sided viscous balances (half-Kruzkov entropies),
  with the per-time Robin weight M(t) and the explicit viscous correction
  -nu int theta grad(w).grad(phi); their defect measures are nonnegative.
* full_balance: the sum of plus and minus, used as a consistency check
  against the kruzkov form.

All residuals should be >= -tol with tol of order dx + dt; the measure
bound additionally caps the plus-part defect mass tested against a
truncated-in-time constant window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EdgeValues, Grid, ScalarField, SIDES
from .kinetic import snapshot_edges, time_quadrature_weights
from .transport import RunResult
from .elliptic import velocity

KINDS = ("kruzkov", "plus", "minus", "full_balance")

# Residual floor coefficients, fitted once on the coarsest built-in
# nucleation baseline (40 cells, nu = 0.1) so that C1*dx and C2*dt each
# equal the dip observed there, then frozen; the combined tolerance is
# twice the fitted dip and must cover every refinement of the scenario.
BASELINE_C1 = 0.122
BASELINE_C2 = 3.9


def audit_tolerance(dx: float, dt: float) -> float:
    """Resolution-scaled negative floor for audit residuals."""
    return BASELINE_C1 * dx + BASELINE_C2 * dt


# ---------------------------------------------------------------------------
# test functions


def _p(w):
    # quintic smoothstep, C2 at both ends
    return ((6.0 * w - 15.0) * w + 10.0) * w**3


def _p_prime(w):
    return ((30.0 * w - 60.0) * w + 30.0) * w**2


def _p_integral(w):
    # int_0^w p
    return ((w - 3.0) * w + 2.5) * w**4


@dataclass(frozen=True)
class BumpProfile:
    """1D quintic bump on [center - radius, center + radius], peak value 1.

    C2 at the support edges and at the center; total integral = radius.
    """

    center: float
    radius: float

    def _u(self, s):
        return (np.asarray(s, dtype=float) - self.center) / self.radius

    def value(self, s):
        u = self._u(s)
        out = np.where(np.abs(u) < 1.0, _p(1.0 - np.minimum(np.abs(u), 1.0)), 0.0)
        return out if out.ndim else float(out)

    def derivative(self, s):
        u = self._u(s)
        inside = np.abs(u) < 1.0
        out = np.where(
            inside, -np.sign(u) * _p_prime(1.0 - np.minimum(np.abs(u), 1.0)) / self.radius, 0.0
        )
        return out if out.ndim else float(out)

    def antiderivative(self, s):
        """int_{-inf}^s of the bump, exact; ranges from 0 to radius."""
        u = np.clip(self._u(s), -1.0, 1.0)
        below = _p_integral(1.0 + np.minimum(u, 0.0))
        above = 1.0 - _p_integral(1.0 - np.maximum(u, 0.0))
        out = self.radius * np.where(u <= 0.0, below, above)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class TestFunction:
    """Tensor-product space-time bump phi(t, x, y) >= 0."""

    __test__ = False  # math term, not a pytest case

    time: BumpProfile
    x: BumpProfile
    y: BumpProfile
    label: str = "phi"

    def value(self, t, x, y):
        return self.time.value(t) * self.x.value(x) * self.y.value(y)

    def d_dt(self, t, x, y):
        return self.time.derivative(t) * self.x.value(x) * self.y.value(y)

    def d_dx(self, t, x, y):
        return self.time.value(t) * self.x.derivative(x) * self.y.value(y)

    def d_dy(self, t, x, y):
        return self.time.value(t) * self.x.value(x) * self.y.derivative(y)


def default_test_functions(t_final: float, lx: float, ly: float) -> list[TestFunction]:
    """The audit family: 3x3x3 lattice of space-time centers times 2 radius
    scales = 54 bumps, all vanishing at t = t_final."""
    out: list[TestFunction] = []
    scales = ((0.15, 0.20), (0.25, 0.35))
    idx = 0
    for s_t, s_xy in scales:
        for ct in (0.20, 0.45, 0.70):
            for cx in (0.25, 0.50, 0.75):
                for cy in (0.25, 0.50, 0.75):
                    out.append(
                        TestFunction(
                            time=BumpProfile(ct * t_final, s_t * t_final),
                            x=BumpProfile(cx * lx, s_xy * lx),
                            y=BumpProfile(cy * ly, s_xy * ly),
                            label=f"b{idx:02d}",
                        )
                    )
                    idx += 1
    return out


@dataclass(frozen=True)
class RampFunction:
    """phi = 1 in space, 1 in time until t_final - eps, then linear to 0.

    The truncation used by the defect-mass bound; constant in space so the
    gradient terms drop out of the balance.
    """

    t_final: float
    eps: float
    label: str = "ramp"

    def time_value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.clip((self.t_final - t) / self.eps, 0.0, 1.0)
        return out if out.ndim else float(out)

    def time_antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        t0 = self.t_final - self.eps
        lin = t0 + (self.eps - 0.5 * (self.t_final - np.minimum(t, self.t_final)) ** 2 / self.eps - 0.5 * self.eps)
        out = np.where(t <= t0, t, lin)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# precomputed trajectory tables


@dataclass
class AuditTables:
    result: RunResult
    slab_edges: np.ndarray
    velocities: list
    b_edges: list[EdgeValues]
    m_per_time: list[float]
    m_global: float


def build_audit_tables(result: RunResult) -> AuditTables:
    times = np.asarray(result.times, dtype=float)
    weights = time_quadrature_weights(times)
    edges = np.concatenate([[times[0]], times[0] + np.cumsum(weights)])
    velocities = []
    b_list = []
    m_list = []
    grid = result.grid
    for k in range(len(result.times)):
        trace, b, _, m = snapshot_edges(result, k)
        velocities.append(velocity(ScalarField(grid, result.hs[k]), trace))
        b_list.append(b)
        m_list.append(m)
    m_global = max(m_list) if m_list else 0.0
    return AuditTables(result, edges, velocities, b_list, m_list, m_global)


# ---------------------------------------------------------------------------
# residual engine


def _space_tables(grid: Grid, phi, quad_refine: int):
    """Cell weights (phi, dphi/dx, dphi/dy times cell area), support slices,
    and face weights (phi at face midpoints times face length)."""
    if isinstance(phi, RampFunction):
        shape = (grid.nx, grid.ny)
        w = np.full(shape, grid.cell_area)
        face_w = {
            s: np.full(grid.side_face_count(s), grid.dy if s in ("left", "right") else grid.dx)
            for s in SIDES
        }
        return (slice(0, grid.nx), slice(0, grid.ny)), w, None, None, face_w

    if quad_refine < 1:
        raise ValueError("quad_refine must be >= 1")
    r = quad_refine
    # subcell midpoints per axis, averaged back to one weight per cell
    off = (np.arange(r) + 0.5) / r - 0.5
    xs = grid.xc[:, None] + off[None, :] * grid.dx
    ys = grid.yc[:, None] + off[None, :] * grid.dy
    px = phi.x.value(xs).mean(axis=1)
    py = phi.y.value(ys).mean(axis=1)
    dpx = phi.x.derivative(xs).mean(axis=1)
    dpy = phi.y.derivative(ys).mean(axis=1)

    ix = np.nonzero((px != 0.0) | (dpx != 0.0))[0]
    iy = np.nonzero((py != 0.0) | (dpy != 0.0))[0]
    if ix.size == 0 or iy.size == 0:
        return None
    sl_x = slice(int(ix[0]), int(ix[-1]) + 1)
    sl_y = slice(int(iy[0]), int(iy[-1]) + 1)
    px, dpx = px[sl_x], dpx[sl_x]
    py, dpy = py[sl_y], dpy[sl_y]
    area = grid.cell_area
    w = np.outer(px, py) * area
    wx = np.outer(dpx, py) * area
    wy = np.outer(px, dpy) * area

    face_w = {}
    for side in SIDES:
        fx, fy = grid.face_midpoints(side)
        face_len = grid.dy if side in ("left", "right") else grid.dx
        face_w[side] = phi.x.value(fx) * phi.y.value(fy) * face_len
    return (sl_x, sl_y), w, wx, wy, face_w


def _time_value(phi, t):
    return phi.time_value(t) if isinstance(phi, RampFunction) else phi.time.value(t)


def _time_antideriv(phi, t):
    return phi.time_antiderivative(t) if isinstance(phi, RampFunction) else phi.time.antiderivative(t)


def _eta_matrices(kind: str, om: np.ndarray, xis: np.ndarray):
    """eta, sign-like factor theta and the entropy flux sign for the chosen
    kind, all as (cells, levels) matrices from the flattened field om."""
    d = om[:, None] - xis[None, :]
    if kind in ("kruzkov", "full_balance"):
        theta = np.sign(d)
        eta = np.abs(d)
    elif kind == "plus":
        theta = (d > 0.0).astype(float)
        eta = d * theta
    else:
        theta = -(d < 0.0).astype(float)
        eta = d * theta
    return eta, theta


def _eta_edge(kind: str, b: np.ndarray, xis: np.ndarray):
    d = b[:, None] - xis[None, :]
    if kind in ("kruzkov", "full_balance"):
        return np.abs(d)
    if kind == "plus":
        return np.maximum(d, 0.0)
    return np.maximum(-d, 0.0)


def residual_matrix(
    result: RunResult,
    xis: np.ndarray,
    phis: list,
    kind: str = "kruzkov",
    tables: AuditTables | None = None,
    quad_refine: int = 1,
) -> np.ndarray:
    """Entropy balance values for every (phi, xi) pair, shape (len(phis), len(xis)).

    Nonnegative for an exact entropy solution; the audits assert residuals
    above a resolution-scaled negative floor.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown audit kind {kind!r}, expected one of {KINDS}")
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    grid = result.grid
    model = result.model
    t_final = result.times[-1]
    viscous = kind != "kruzkov"
    if viscous and result.gradients is None:
        raise ValueError(
            "viscous balance needs stored gradient snapshots; rerun with gradient storage on"
        )
    if tables is None:
        tables = build_audit_tables(result)
    g_xi = np.asarray(model.g(xis), dtype=float)
    n_t = len(result.times)
    edges = tables.slab_edges

    out = np.empty((len(phis), xis.size))
    for ip, phi in enumerate(phis):
        if abs(_time_value(phi, t_final)) > 0.0:
            raise ValueError(f"test function {getattr(phi, 'label', ip)} must vanish at t_final")
        st = _space_tables(grid, phi, quad_refine)
        if st is None:
            out[ip, :] = 0.0
            continue
        (sl_x, sl_y), w, wx, wy, face_w = st
        w_flat = w.ravel()
        it_k = np.diff(_time_antideriv(phi, edges))
        jt_k = np.diff(_time_value(phi, edges))
        acc = np.zeros(xis.size)

        for k in range(n_t):
            if it_k[k] == 0.0 and jt_k[k] == 0.0:
                continue
            om = result.omegas[k][sl_x, sl_y].ravel()
            eta, theta = _eta_matrices(kind, om, xis)
            # time term: int eta phi_t, slab-exact
            if jt_k[k] != 0.0:
                acc += jt_k[k] * (w_flat @ eta)
            if it_k[k] != 0.0:
                h_sub = result.hs[k][sl_x, sl_y].ravel()
                g_om = np.asarray(model.g(om), dtype=float)
                q = theta * (g_om[:, None] - g_xi[None, :])
                # entropy flux against v . grad(phi)
                if wx is not None:
                    v = tables.velocities[k]
                    a = (v.x[sl_x, sl_y] * wx + v.y[sl_x, sl_y] * wy).ravel()
                    acc += it_k[k] * (a @ q)
                # elliptic coupling: theta g(xi) (h - w) phi
                c = (w_flat * (h_sub - om)) @ theta
                acc += it_k[k] * (c * g_xi)
                # wall term
                m_t = tables.m_per_time[k] if viscous else tables.m_global
                if m_t != 0.0:
                    bsum = np.zeros(xis.size)
                    for side in SIDES:
                        fw = face_w[side]
                        if not np.any(fw):
                            continue
                        bsum += fw @ _eta_edge(kind, tables.b_edges[k].get(side), xis)
                    acc += it_k[k] * m_t * bsum
                # viscous correction
                if viscous and wx is not None and result.nu != 0.0:
                    gx, gy = result.gradients[k]
                    a = (gx[sl_x, sl_y] * wx + gy[sl_x, sl_y] * wy).ravel()
                    acc -= result.nu * it_k[k] * (a @ theta)
        # initial layer
        phi0 = _time_value(phi, result.times[0])
        if phi0 != 0.0:
            om0 = result.omegas[0][sl_x, sl_y].ravel()
            eta0, _ = _eta_matrices(kind, om0, xis)
            acc += phi0 * (w_flat @ eta0)
        out[ip, :] = acc
    return out


def kruzkov_residual(result: RunResult, xi: float, phi, quad_refine: int = 1) -> float:
    """Weak Kruzkov entropy residual of the trajectory at one level/bump."""
    return float(residual_matrix(result, np.array([xi]), [phi], "kruzkov", quad_refine=quad_refine)[0, 0])


def viscous_entropy_balance(result: RunResult, xi: float, phi, part: str = "plus") -> float:
    """One-sided viscous kinetic balance (part = plus or minus), or their sum
    (part = full_balance); needs gradient snapshots."""
    if part not in ("plus", "minus", "full_balance"):
        raise ValueError(f"part must be plus, minus or full_balance, got {part!r}")
    return float(residual_matrix(result, np.array([xi]), [phi], part)[0, 0])


# ---------------------------------------------------------------------------
# defect-mass bound and scalar monitors


@dataclass
class MeasureBoundReport:
    xis: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant: float
    eps: float

    @property
    def max_margin(self) -> float:
        return float(np.max(self.lhs - self.rhs))

    def passed(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.lhs <= self.rhs + tol))


def measure_bound_check(
    result: RunResult,
    xis,
    constant: float,
    eps: float | None = None,
    tables: AuditTables | None = None,
) -> MeasureBoundReport:
    """Check the plus-part defect mass against its data bound:

    balance(ramp) <= int |w0 - xi|_+ + int M(t) |b - xi|_+ + C g(xi).

    The left side is the plus balance at the time-truncated constant test
    function; C is the calibrated coupling constant supplied by the caller.
    """
    grid = result.grid
    model = result.model
    t_final = result.times[-1]
    if t_final <= 0.0:
        raise ValueError("measure bound needs a positive-length trajectory")
    if eps is None:
        dt_out = t_final / max(len(result.times) - 1, 1)
        eps = min(2.0 * dt_out, 0.5 * t_final)
    if tables is None:
        tables = build_audit_tables(result)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))

    ramp = RampFunction(t_final=t_final, eps=float(eps))
    # the plus balance never touches gradients for a space-constant phi
    grads_missing = result.gradients is None
    if grads_missing:
        result.gradients = [(np.zeros_like(result.omegas[0]),) * 2] * len(result.times)
    try:
        lhs = residual_matrix(result, xis, [ramp], "plus", tables=tables)[0]
    finally:
        if grads_missing:
            result.gradients = None

    om0 = result.omegas[0].ravel()
    initial = (np.maximum(om0[:, None] - xis[None, :], 0.0)).sum(axis=0) * grid.cell_area
    weights = time_quadrature_weights(result.times)
    wall = np.zeros(xis.size)
    for k, wt in enumerate(weights):
        if wt == 0.0 or tables.m_per_time[k] == 0.0:
            continue
        for side in SIDES:
            face_len = grid.dy if side in ("left", "right") else grid.dx
            b = tables.b_edges[k].get(side)
            wall += wt * tables.m_per_time[k] * face_len * np.maximum(
                b[:, None] - xis[None, :], 0.0
            ).sum(axis=0)
    rhs = initial + wall + float(constant) * np.asarray(model.g(xis), dtype=float)
    return MeasureBoundReport(xis=xis, lhs=lhs, rhs=rhs, constant=float(constant), eps=float(eps))


@dataclass
class BoundMonitors:
    sup_omega: float
    sqrt_nu_grad_l2: float
    mass_initial: float
    mass_final: float
    max_mass_error: float
    max_energy_residual: float
    robin_max: float


def bound_monitors(result: RunResult) -> BoundMonitors:
    """Scalar a-priori bound witnesses for one run."""
    area = result.grid.cell_area
    if result.reports:
        max_mass = max(abs(r.mass_identity_error) / r.mass_scale for r in result.reports)
        max_energy = max(abs(r.energy_residual) for r in result.reports)
        robin_max = max(r.robin_m for r in result.reports)
    else:
        max_mass = float("nan")
        max_energy = float("nan")
        robin_max = float("nan")
    return BoundMonitors(
        sup_omega=result.sup_omega,
        sqrt_nu_grad_l2=result.sqrt_nu_grad_l2,
        mass_initial=float(np.sum(result.omegas[0])) * area,
        mass_final=float(np.sum(result.omegas[-1])) * area,
        max_mass_error=max_mass,
        max_energy_residual=max_energy,
        robin_max=robin_max,
    )
