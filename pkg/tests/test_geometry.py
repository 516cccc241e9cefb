import numpy as np
import pytest

from vortexlayer.geometry import EdgeValues, Grid, ScalarField, SIDES, VectorField


def test_grid_basic_metrics():
    g = Grid(8, 4, 2.0, 1.0)
    assert g.dx == 0.25
    assert g.dy == 0.25
    assert g.cell_area == 0.0625
    assert g.xc[0] == pytest.approx(0.125)
    assert g.xc[-1] == pytest.approx(2.0 - 0.125)
    assert g.yc.shape == (4,)
    assert g.perimeter == pytest.approx(6.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1, 4, 1.0, 1.0)
    with pytest.raises(ValueError):
        Grid(4, 4, 0.0, 1.0)
    with pytest.raises(ValueError):
        Grid(4, 4, 1.0, -2.0)


def test_grid_equality_and_repr():
    assert Grid(4, 4, 1.0, 1.0) == Grid(4, 4, 1.0, 1.0)
    assert Grid(4, 4, 1.0, 1.0) != Grid(4, 8, 1.0, 1.0)
    assert "4" in repr(Grid(4, 4, 1.0, 1.0))


def test_boundary_faces_walk_the_rectangle():
    g = Grid(5, 3, 1.0, 0.6)
    faces = list(g.boundary_faces())
    assert len(faces) == 2 * (5 + 3)
    # canonical side order, outward unit normals, midpoints on the wall
    sides_seen = [f.side for f in faces]
    assert sides_seen == ["left"] * 3 + ["right"] * 3 + ["bottom"] * 5 + ["top"] * 5
    for f in faces:
        nx, ny = f.normal
        assert nx * nx + ny * ny == pytest.approx(1.0)
        x, y = f.midpoint
        on_wall = x in (0.0, 1.0) or y in (0.0, 0.6)
        assert on_wall
    assert sum(f.area for f in faces) == pytest.approx(g.perimeter)


def test_face_arclength_is_counterclockwise_and_injective():
    g = Grid(6, 4, 1.5, 1.0)
    all_s = []
    for side in SIDES:
        s = g.face_arclength(side)
        assert s.shape == (g.side_face_count(side),)
        all_s.extend(s.tolist())
    assert len(set(np.round(all_s, 12))) == len(all_s)
    assert min(all_s) >= 0.0
    assert max(all_s) < g.perimeter
    # bottom faces come first along the walk from the origin corner
    assert g.face_arclength("bottom")[0] == pytest.approx(0.5 * g.dx)


def test_distance_field_minimum_over_walls():
    g = Grid(10, 6, 1.0, 0.6)
    d = g.distance_field()
    assert d.shape == (10, 6)
    # corner cell: distance to the nearer wall
    assert d[0, 0] == pytest.approx(min(g.xc[0], g.yc[0]))
    # the short axis binds: max distance is the y half-width minus half a cell
    assert d.max() == pytest.approx(0.25)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    assert j in (2, 3)


def test_edge_values_roundtrip():
    g = Grid(4, 3, 1.0, 1.0)
    ev = EdgeValues.constant(g, 2.5)
    assert ev.left.shape == (3,)
    assert ev.bottom.shape == (4,)
    assert ev.min() == ev.max() == 2.5
    ev.set("top", np.arange(4.0))
    assert ev.get("top")[2] == 2.0
    assert ev.max() == 3.0
    vec = ev.as_vector()
    assert vec.shape == (2 * (4 + 3),)


def test_scalar_field_integral_and_validation():
    g = Grid(4, 4, 2.0, 2.0)
    f = ScalarField(g, np.ones((4, 4)))
    assert f.integral() == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ScalarField(g, np.ones((4, 5)))
    g2 = f.copy()
    g2.values[0, 0] = 7.0
    assert f.values[0, 0] == 1.0


def test_vector_field_max_norm():
    g = Grid(3, 3, 1.0, 1.0)
    vx = np.zeros((3, 3))
    vy = np.zeros((3, 3))
    vx[1, 2] = -4.0
    vy[0, 0] = 3.0
    v = VectorField(g, vx, vy)
    assert v.max_norm() == 4.0
