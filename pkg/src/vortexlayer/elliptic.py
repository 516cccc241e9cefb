"""Screened Poisson solve -lap(h) + h = w with Dirichlet trace, and the
derived drift velocity v = -grad(h).

Discretization: 5-point Laplacian on the cell-centered grid.  Dirichlet
data enters through ghost values linearly extrapolated across the face
midpoint (ghost = 2 a - h_cell), which is the standard two-point flux with
half-cell spacing.  The operator is symmetric positive definite thanks to
the +h term, so the solve is a preconditioned conjugate gradient iteration.

The default preconditioner diagonalizes the operator exactly with type-II
discrete sine transforms (the cell-centered Dirichlet stencil has the
DST-II basis as eigenvectors), so CG normally converges in one iteration;
the CG wrapper still enforces the residual tolerance and stays available
unpreconditioned for cross-checks.

All stencils are written as differences of differences so that constant
states produce bitwise-zero Laplacians and gradients; the transport loop
relies on this for exact steady states.
"""
from __future__ import annotations

import numpy as np
from scipy.fft import dstn, idstn

from .geometry import EdgeValues, Grid, ScalarField, VectorField


class SolverConvergenceError(RuntimeError):
    """CG hit the iteration cap; carries the final relative residual."""

    def __init__(self, iterations: int, relative_residual: float):
        self.iterations = iterations
        self.relative_residual = relative_residual
        super().__init__(
            f"conjugate gradient did not converge in {iterations} iterations, "
            f"final relative residual {relative_residual:.3e}"
        )


def _face_differences(grid: Grid, u: np.ndarray, trace: EdgeValues | None):
    """Forward differences at all x-faces and y-faces, oriented +x / +y.

    Boundary faces use the ghost-cell extrapolation ghost = 2 a - u_cell,
    which makes the boundary difference 2 (a - u_cell) (left/bottom flip
    the sign because the orientation is fixed to +x / +y).  trace = None
    means homogeneous Dirichlet data.
    """
    nx, ny = grid.nx, grid.ny
    ddx = np.empty((nx + 1, ny))
    ddx[1:-1, :] = u[1:, :] - u[:-1, :]
    ddy = np.empty((nx, ny + 1))
    ddy[:, 1:-1] = u[:, 1:] - u[:, :-1]
    if trace is None:
        ddx[0, :] = 2.0 * u[0, :]
        ddx[-1, :] = -2.0 * u[-1, :]
        ddy[:, 0] = 2.0 * u[:, 0]
        ddy[:, -1] = -2.0 * u[:, -1]
    else:
        ddx[0, :] = 2.0 * (u[0, :] - trace.left)
        ddx[-1, :] = 2.0 * (trace.right - u[-1, :])
        ddy[:, 0] = 2.0 * (u[:, 0] - trace.bottom)
        ddy[:, -1] = 2.0 * (trace.top - u[:, -1])
    return ddx, ddy


def _laplacian(grid: Grid, u: np.ndarray, trace: EdgeValues | None) -> np.ndarray:
    ddx, ddy = _face_differences(grid, u, trace)
    return (ddx[1:, :] - ddx[:-1, :]) / grid.dx**2 + (ddy[:, 1:] - ddy[:, :-1]) / grid.dy**2


def _apply_operator(grid: Grid, u: np.ndarray) -> np.ndarray:
    """u - lap(u) with homogeneous Dirichlet ghosts."""
    return u - _laplacian(grid, u, None)


_spectral_cache: dict[tuple[int, int, float, float], np.ndarray] = {}


def _spectral_symbol(grid: Grid) -> np.ndarray:
    key = (grid.nx, grid.ny, grid.dx, grid.dy)
    sym = _spectral_cache.get(key)
    if sym is None:
        kx = np.arange(1, grid.nx + 1)
        ky = np.arange(1, grid.ny + 1)
        lam_x = (2.0 - 2.0 * np.cos(kx * np.pi / grid.nx)) / grid.dx**2
        lam_y = (2.0 - 2.0 * np.cos(ky * np.pi / grid.ny)) / grid.dy**2
        sym = 1.0 + lam_x[:, None] + lam_y[None, :]
        _spectral_cache[key] = sym
    return sym


def _spectral_apply_inverse(grid: Grid, r: np.ndarray) -> np.ndarray:
    coef = dstn(r, type=2, norm="ortho")
    coef /= _spectral_symbol(grid)
    return idstn(coef, type=2, norm="ortho")


def cg_solve(
    grid: Grid,
    rhs: np.ndarray,
    *,
    tol: float = 1e-10,
    max_iterations: int = 100_000,
    guess: np.ndarray | None = None,
    preconditioner: str = "spectral",
) -> tuple[np.ndarray, int, float]:
    """Solve (I - lap) x = rhs, returning (x, iterations, relative residual).

    tol is relative to ||rhs||; raises SolverConvergenceError at the cap.
    """
    if preconditioner not in ("spectral", "none"):
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    x = np.zeros_like(rhs) if guess is None else guess.astype(float, copy=True)
    r = rhs - _apply_operator(grid, x)
    res = float(np.linalg.norm(r))
    if res <= tol * bnorm:
        return x, 0, res / bnorm
    z = _spectral_apply_inverse(grid, r) if preconditioner == "spectral" else r.copy()
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(1, max_iterations + 1):
        ap = _apply_operator(grid, p)
        alpha = rz / float(np.sum(p * ap))
        x = x + alpha * p
        r = r - alpha * ap
        res = float(np.linalg.norm(r))
        if res <= tol * bnorm:
            return x, it, res / bnorm
        z = _spectral_apply_inverse(grid, r) if preconditioner == "spectral" else r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverConvergenceError(max_iterations, res / bnorm)


def solve_screened_poisson(
    grid: Grid,
    source: ScalarField | np.ndarray,
    trace: EdgeValues,
    *,
    tol: float = 1e-10,
    max_iterations: int = 100_000,
    guess: np.ndarray | None = None,
    preconditioner: str = "spectral",
) -> ScalarField:
    """Solve -lap(h) + h = source with Dirichlet boundary values `trace`.

    The discrete solution obeys the maximum principle
    min(min source, min trace) <= h <= max(max source, max trace)
    up to the solver tolerance (the stencil matrix is an M-matrix).
    """
    w = source.values if isinstance(source, ScalarField) else np.asarray(source, dtype=float)
    if w.shape != (grid.nx, grid.ny):
        raise ValueError(f"source shape {w.shape} does not match grid ({grid.nx}, {grid.ny})")
    rhs = w + _laplacian(grid, np.zeros_like(w), trace)
    x, _, _ = cg_solve(
        grid,
        rhs,
        tol=tol,
        max_iterations=max_iterations,
        guess=guess,
        preconditioner=preconditioner,
    )
    return ScalarField(grid, x)


def solve_background(grid: Grid, trace: EdgeValues, **kwargs) -> ScalarField:
    """Trace-driven solve with zero source: -lap(h) + h = 0, h = a on the wall."""
    return solve_screened_poisson(grid, np.zeros((grid.nx, grid.ny)), trace, **kwargs)


def velocity(h: ScalarField, trace: EdgeValues) -> VectorField:
    """Drift v = -grad(h): central differences inside, one-sided quadratic
    fits through the Dirichlet trace in boundary cells.

    Exactly zero for constant h with matching trace (differences of equal
    values only).
    """
    grid = h.grid
    u = h.values
    dhdx = np.empty_like(u)
    dhdy = np.empty_like(u)
    dhdx[1:-1, :] = (u[2:, :] - u[:-2, :]) / (2.0 * grid.dx)
    dhdy[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * grid.dy)
    # quadratic through (wall, a), (dx/2, u0), (3dx/2, u1); d/ds at s = dx/2
    dhdx[0, :] = (3.0 * (u[0, :] - trace.left) + (u[1, :] - trace.left)) / (3.0 * grid.dx)
    dhdx[-1, :] = -(3.0 * (u[-1, :] - trace.right) + (u[-2, :] - trace.right)) / (3.0 * grid.dx)
    dhdy[:, 0] = (3.0 * (u[:, 0] - trace.bottom) + (u[:, 1] - trace.bottom)) / (3.0 * grid.dy)
    dhdy[:, -1] = -(3.0 * (u[:, -1] - trace.top) + (u[:, -2] - trace.top)) / (3.0 * grid.dy)
    return VectorField(grid, -dhdx, -dhdy)


def normal_derivative(h: ScalarField, trace: EdgeValues) -> EdgeValues:
    """Outward normal derivative of h at every boundary face midpoint.

    One-sided second-order fit through the trace value and the two nearest
    cell centers: dh/dn = (8 (a - h0) + (h1 - h0)) / (3 delta).
    """
    grid = h.grid
    u = h.values

    def z(a, h0, h1, delta):
        return (8.0 * (a - h0) + (h1 - h0)) / (3.0 * delta)

    return EdgeValues(
        left=z(trace.left, u[0, :], u[1, :], grid.dx),
        right=z(trace.right, u[-1, :], u[-2, :], grid.dx),
        bottom=z(trace.bottom, u[:, 0], u[:, 1], grid.dy),
        top=z(trace.top, u[:, -1], u[:, -2], grid.dy),
    )
