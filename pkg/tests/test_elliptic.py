import numpy as np
import pytest

from vortexlayer.elliptic import (
    SolverConvergenceError,
    cg_solve,
    normal_derivative,
    solve_screened_poisson,
    velocity,
)
from vortexlayer.geometry import EdgeValues, Grid, ScalarField, SIDES


# manufactured solution h = sin(pi x) sin(pi y) on the unit square:
# -lap h + h = (1 + 2 pi^2) h, zero trace on every wall

def _manufactured(nx):
    g = Grid(nx, nx, 1.0, 1.0)
    x, y = np.meshgrid(g.xc, g.yc, indexing="ij")
    exact = np.sin(np.pi * x) * np.sin(np.pi * y)
    source = (1.0 + 2.0 * np.pi**2) * exact
    return g, exact, source


def _l2_error(grid, a, b):
    return float(np.sqrt(np.sum((a - b) ** 2) * grid.cell_area))


def test_manufactured_solution_second_order():
    errs = {}
    for nx in (32, 64):
        g, exact, source = _manufactured(nx)
        h = solve_screened_poisson(g, source, EdgeValues.zeros(g))
        errs[nx] = _l2_error(g, h.values, exact)
    ratio = errs[32] / errs[64]
    assert 3.5 <= ratio <= 4.5


def test_plain_cg_agrees_with_preconditioned():
    g, _, source = _manufactured(24)
    trace = EdgeValues.constant(g, 0.3)
    h1 = solve_screened_poisson(g, source, trace, preconditioner="spectral")
    h2 = solve_screened_poisson(g, source, trace, preconditioner="none")
    assert np.max(np.abs(h1.values - h2.values)) <= 1e-8
    # iteration counts on the raw operator: the diagonalizing
    # preconditioner finishes in O(1) passes, plain CG does not
    # (a random rhs, unlike the manufactured one, is no eigenvector)
    rhs = np.random.default_rng(3).standard_normal((24, 24))
    _, it1, _ = cg_solve(g, rhs, preconditioner="spectral")
    _, it2, _ = cg_solve(g, rhs, preconditioner="none")
    assert it1 <= 3
    assert it2 > it1


def test_constant_data_solved_exactly():
    """Constant source with matching trace must reproduce the constant
    bitwise; the whole steady-state story rests on this."""
    g = Grid(17, 13, 1.3, 0.7)
    for c in (0.0, 0.7, -2.5):
        w = np.full((17, 13), c)
        h = solve_screened_poisson(g, w, EdgeValues.constant(g, c), guess=w)
        assert np.array_equal(h.values, w)


def test_discrete_maximum_principle():
    rng = np.random.default_rng(11)
    g = Grid(20, 20, 1.0, 1.0)
    w = rng.uniform(-1.0, 2.0, (20, 20))
    trace = EdgeValues.constant(g, 0.5)
    h = solve_screened_poisson(g, w, trace).values
    assert h.max() <= max(w.max(), 0.5) + 1e-9
    assert h.min() >= min(w.min(), 0.5) - 1e-9


def test_solver_determinism():
    g, _, source = _manufactured(20)
    trace = EdgeValues.constant(g, 0.1)
    h1 = solve_screened_poisson(g, source, trace)
    h2 = solve_screened_poisson(g, source, trace)
    assert np.array_equal(h1.values, h2.values)


def test_nonconvergence_raises_with_diagnostics():
    g = Grid(16, 16, 1.0, 1.0)
    rhs = np.random.default_rng(5).standard_normal((16, 16))
    with pytest.raises(SolverConvergenceError) as exc:
        cg_solve(g, rhs, tol=1e-14, max_iterations=2, preconditioner="none")
    assert exc.value.iterations == 2
    assert exc.value.relative_residual > 1e-14


def test_velocity_of_linear_potential():
    """h = x gives v = -grad h = (-1, 0) exactly, including the one-sided
    boundary columns."""
    g = Grid(12, 9, 1.0, 1.0)
    x, _ = np.meshgrid(g.xc, g.yc, indexing="ij")
    h = ScalarField(g, x.copy())
    trace = EdgeValues(
        left=np.zeros(9),
        right=np.ones(9),
        bottom=g.xc.copy(),
        top=g.xc.copy(),
    )
    v = velocity(h, trace)
    assert np.allclose(v.x, -1.0, atol=1e-13)
    assert np.allclose(v.y, 0.0, atol=1e-13)


def test_velocity_of_constant_potential_is_exactly_zero():
    g = Grid(10, 10, 1.0, 1.0)
    h = ScalarField(g, np.full((10, 10), 0.7))
    v = velocity(h, EdgeValues.constant(g, 0.7))
    assert np.array_equal(v.x, np.zeros((10, 10)))
    assert np.array_equal(v.y, np.zeros((10, 10)))


def test_normal_derivative_of_linear_field():
    g = Grid(16, 16, 1.0, 1.0)
    x, _ = np.meshgrid(g.xc, g.yc, indexing="ij")
    h = ScalarField(g, x.copy())
    trace = EdgeValues(
        left=np.zeros(16), right=np.ones(16), bottom=g.xc.copy(), top=g.xc.copy()
    )
    z = normal_derivative(h, trace)
    # outward derivative of x: -1 on the left wall, +1 on the right, 0 above/below
    assert np.allclose(z.left, -1.0, atol=1e-12)
    assert np.allclose(z.right, 1.0, atol=1e-12)
    assert np.allclose(z.bottom, 0.0, atol=1e-12)
    assert np.allclose(z.top, 0.0, atol=1e-12)


def test_normal_derivative_zero_for_matching_constant():
    g = Grid(8, 8, 2.0, 2.0)
    h = ScalarField(g, np.full((8, 8), 1.25))
    z = normal_derivative(h, EdgeValues.constant(g, 1.25))
    for side in SIDES:
        assert np.array_equal(z.get(side), np.zeros(8))
