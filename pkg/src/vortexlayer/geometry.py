"""Structured rectangular grids and boundary bookkeeping.

Cell-centered layout: cell (i, j) covers [i*dx, (i+1)*dx] x [j*dy, (j+1)*dy]
with center ((i+1/2)*dx, (j+1/2)*dy).  Fields are numpy arrays of shape
(nx, ny) indexed [i, j].  Boundary faces are enumerated per side in the
fixed order left, right, bottom, top.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIDES = ("left", "right", "bottom", "top")

# outward unit normal per side
_NORMALS = {
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "bottom": (0.0, -1.0),
    "top": (0.0, 1.0),
}


@dataclass(frozen=True)
class BoundaryFace:
    """One face of a boundary cell, with outward normal and midpoint."""

    cell: tuple[int, int]
    side: str
    normal: tuple[float, float]
    midpoint: tuple[float, float]
    area: float


class Grid:
    """Uniform rectangular grid on [0, lx] x [0, ly] with nx*ny cells.

    Immutable by convention; all derived arrays are computed once here.
    """

    def __init__(self, nx: int, ny: int, lx: float, ly: float):
        nx, ny = int(nx), int(ny)
        lx, ly = float(lx), float(ly)
        if nx < 2 or ny < 2:
            raise ValueError(f"grid needs at least 2 cells per axis, got nx={nx}, ny={ny}")
        if not (lx > 0.0 and ly > 0.0):
            raise ValueError(f"domain lengths must be positive, got lx={lx}, ly={ly}")
        self.nx = nx
        self.ny = ny
        self.lx = lx
        self.ly = ly
        self.dx = lx / nx
        self.dy = ly / ny
        self.cell_area = self.dx * self.dy
        self.xc = (np.arange(nx) + 0.5) * self.dx
        self.yc = (np.arange(ny) + 0.5) * self.dy

    # -- boundary faces ------------------------------------------------

    def boundary_faces(self) -> list[BoundaryFace]:
        """All boundary faces in the canonical order left, right, bottom, top.

        Within a side, faces follow the cell index along that side.
        """
        faces: list[BoundaryFace] = []
        for side in SIDES:
            n = _NORMALS[side]
            if side in ("left", "right"):
                i = 0 if side == "left" else self.nx - 1
                x = 0.0 if side == "left" else self.lx
                for j in range(self.ny):
                    faces.append(
                        BoundaryFace((i, j), side, n, (x, float(self.yc[j])), self.dy)
                    )
            else:
                j = 0 if side == "bottom" else self.ny - 1
                y = 0.0 if side == "bottom" else self.ly
                for i in range(self.nx):
                    faces.append(
                        BoundaryFace((i, j), side, n, (float(self.xc[i]), y), self.dx)
                    )
        return faces

    def side_face_count(self, side: str) -> int:
        return self.ny if side in ("left", "right") else self.nx

    def face_midpoints(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint coordinates (x, y arrays) of the faces of one side."""
        if side == "left":
            return np.zeros(self.ny), self.yc.copy()
        if side == "right":
            return np.full(self.ny, self.lx), self.yc.copy()
        if side == "bottom":
            return self.xc.copy(), np.zeros(self.nx)
        if side == "top":
            return self.xc.copy(), np.full(self.nx, self.ly)
        raise ValueError(f"unknown side {side!r}")

    def face_arclength(self, side: str) -> np.ndarray:
        """Perimeter coordinate of face midpoints, counterclockwise from (0, 0).

        The parametrization runs bottom -> right -> top -> left so that it is
        continuous along the closed boundary curve.
        """
        if side == "bottom":
            return self.xc.copy()
        if side == "right":
            return self.lx + self.yc
        if side == "top":
            # traversed right-to-left
            return self.lx + self.ly + (self.lx - self.xc)
        if side == "left":
            # traversed top-to-bottom
            return 2.0 * self.lx + self.ly + (self.ly - self.yc)
        raise ValueError(f"unknown side {side!r}")

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.lx + self.ly)

    def distance_to_boundary(self, cell: tuple[int, int]) -> float:
        """Distance from the cell center to the nearest boundary point."""
        i, j = cell
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise ValueError(f"cell {cell} outside grid {self.nx}x{self.ny}")
        x = float(self.xc[i])
        y = float(self.yc[j])
        return min(x, self.lx - x, y, self.ly - y)

    def distance_field(self) -> np.ndarray:
        """distance_to_boundary evaluated at every cell center, shape (nx, ny)."""
        dxb = np.minimum(self.xc, self.lx - self.xc)
        dyb = np.minimum(self.yc, self.ly - self.yc)
        return np.minimum(dxb[:, None], dyb[None, :])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and (self.nx, self.ny, self.lx, self.ly) == (other.nx, other.ny, other.lx, other.ly)
        )

    def __hash__(self):
        return hash((self.nx, self.ny, self.lx, self.ly))

    def __repr__(self) -> str:
        return f"Grid(nx={self.nx}, ny={self.ny}, lx={self.lx}, ly={self.ly})"


@dataclass
class EdgeValues:
    """One scalar per boundary face, stored per side.

    left/right arrays have length ny, bottom/top have length nx.  Used for
    Dirichlet traces, inflow boundary values and per-face flux tallies.
    """

    left: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "EdgeValues":
        return cls(
            left=np.full(grid.ny, float(value)),
            right=np.full(grid.ny, float(value)),
            bottom=np.full(grid.nx, float(value)),
            top=np.full(grid.nx, float(value)),
        )

    @classmethod
    def zeros(cls, grid: Grid) -> "EdgeValues":
        return cls.constant(grid, 0.0)

    def get(self, side: str) -> np.ndarray:
        return getattr(self, side)

    def set(self, side: str, values: np.ndarray) -> None:
        setattr(self, side, values)

    def as_vector(self) -> np.ndarray:
        """Flatten in the canonical face order (left, right, bottom, top)."""
        return np.concatenate([self.left, self.right, self.bottom, self.top])

    def min(self) -> float:
        return float(self.as_vector().min())

    def max(self) -> float:
        return float(self.as_vector().max())


@dataclass
class ScalarField:
    """Cell-centered scalar samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def integral(self) -> float:
        return float(self.values.sum()) * self.grid.cell_area


@dataclass
class VectorField:
    """Cell-centered vector samples on a grid."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        shape = (self.grid.nx, self.grid.ny)
        if self.x.shape != shape or self.y.shape != shape:
            raise ValueError("vector component shape does not match grid")

    def max_norm(self) -> float:
        """Max over cells of the componentwise max norm."""
        return float(np.maximum(np.abs(self.x), np.abs(self.y)).max())
