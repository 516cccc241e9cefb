"""Boundary data: Dirichlet trace for the potential, nucleation law for the
inflow density, Robin coefficient for the viscous boundary condition.

The inflow density law is
    b = b0 + b1 * max(|z| - J, 0)**kappa,   z = dh/dn at the face,
with activation threshold J and a strictly sublinear exponent
kappa in (0, 1); the construction degenerates at kappa = 1, so that value
is rejected.  b is continuous (not smooth) in z across the threshold.

The Robin coefficient is M = K * max|v| with the max taken over cells of
the componentwise max norm; it multiplies (omega - b) in the boundary
diffusive flux, so the boundary condition relaxes the wall density toward
b at the advective rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flux_models import FluxModel
from .geometry import EdgeValues, Grid, SIDES, VectorField

PROFILE_KINDS = ("constant", "sinusoid", "per_side")


@dataclass(frozen=True)
class SideProfile:
    """Scalar boundary profile evaluated at face midpoints.

    kinds:
      constant: value everywhere
      sinusoid: offset + amplitude * sin(2 pi mode * l / P + phase), with l
                the counterclockwise arc length of the face midpoint
      per_side: one constant per side (left, right, bottom, top)
    """

    kind: str = "constant"
    value: float = 0.0
    offset: float = 0.0
    amplitude: float = 0.0
    mode: int = 1
    phase: float = 0.0
    sides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}, expected {PROFILE_KINDS}")
        if self.kind == "per_side":
            missing = [s for s in SIDES if s not in self.sides]
            if missing:
                raise ValueError(f"per_side profile missing sides {missing}")

    def evaluate(self, grid: Grid, side: str, t: float = 0.0) -> np.ndarray:
        # presets are time independent; t is part of the interface so that
        # time-dependent laws can slot in later
        n = grid.side_face_count(side)
        if self.kind == "constant":
            return np.full(n, float(self.value))
        if self.kind == "per_side":
            return np.full(n, float(self.sides[side]))
        arc = grid.face_arclength(side)
        return self.offset + self.amplitude * np.sin(
            2.0 * np.pi * self.mode * arc / grid.perimeter + self.phase
        )

    def edges(self, grid: Grid, t: float = 0.0) -> EdgeValues:
        return EdgeValues(*(self.evaluate(grid, s, t) for s in SIDES))

    def range_bounds(self) -> tuple[float, float]:
        """(lower, upper) bounds of the profile over any grid."""
        if self.kind == "constant":
            return float(self.value), float(self.value)
        if self.kind == "per_side":
            vals = [float(self.sides[s]) for s in SIDES]
            return min(vals), max(vals)
        a = abs(float(self.amplitude))
        return float(self.offset) - a, float(self.offset) + a

    @classmethod
    def constant_value(cls, value: float) -> "SideProfile":
        return cls(kind="constant", value=float(value))


@dataclass(frozen=True)
class BoundaryData:
    """Complete boundary description for a run."""

    a: SideProfile
    b0: SideProfile
    j_threshold: SideProfile
    b1: float
    kappa: float

    def __post_init__(self):
        if not (0.0 < self.kappa < 1.0):
            raise ValueError(
                f"nucleation exponent kappa must lie strictly inside (0, 1), got "
                f"{self.kappa}; the sublinear growth is what keeps the inflow law "
                f"well posed and kappa = 1 is excluded"
            )
        if self.b1 < 0.0:
            raise ValueError(f"nucleation gain b1 must be nonnegative, got {self.b1}")
        lo, _ = self.b0.range_bounds()
        if lo < 0.0:
            raise ValueError(f"baseline inflow density b0 must be nonnegative, min is {lo}")

    def trace_a(self, grid: Grid, t: float = 0.0) -> EdgeValues:
        return self.a.edges(grid, t)


def nucleation_values(
    boundary: BoundaryData, grid: Grid, normal_gradient: EdgeValues, t: float = 0.0
) -> EdgeValues:
    """Inflow density b at every boundary face from the normal derivative.

    b = b0 + b1 * max(|z| - J, 0)**kappa per face; b >= b0 >= 0 and b is
    continuous in z (the ramp vanishes with its argument at the threshold).
    """
    out = EdgeValues.zeros(grid)
    for side in SIDES:
        b0 = boundary.b0.evaluate(grid, side, t)
        j = boundary.j_threshold.evaluate(grid, side, t)
        z = normal_gradient.get(side)
        excess = np.maximum(np.abs(z) - j, 0.0)
        out.set(side, b0 + boundary.b1 * excess**boundary.kappa)
    return out


def robin_coefficient(model: FluxModel, v: VectorField) -> float:
    """M = K * max over cells of the componentwise max norm of v."""
    return model.lipschitz * v.max_norm()


def inflow_indicator(model: FluxModel, omega_face, v_dot_n):
    """True where the characteristic enters the domain: g'(w) (v.n) < 0.

    omega_face is the owner-cell density at the face; v_dot_n the outward
    normal velocity component.  Vectorized; returns bool scalar or array.
    """
    out = np.asarray(model.g_prime(omega_face) * np.asarray(v_dot_n, dtype=float) < 0.0)
    return out if out.ndim else bool(out)
