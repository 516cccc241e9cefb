"""Finite-volume study of viscous vortex transport coupled to a screened
Poisson potential, with wall nucleation, kinetic-formulation diagnostics,
entropy audits, and a vanishing-viscosity sweep harness."""

from .boundary import BoundaryData, SideProfile, nucleation_values, robin_coefficient
from .config import RunConfig, canonical_text, load_config, parse_config, scenario
from .elliptic import (
    SolverConvergenceError,
    cg_solve,
    normal_derivative,
    solve_background,
    solve_screened_poisson,
    velocity,
)
from .entropy_audit import (
    BumpProfile,
    TestFunction,
    audit_tolerance,
    default_test_functions,
    kruzkov_residual,
    measure_bound_check,
    residual_matrix,
    viscous_entropy_balance,
)
from .flux_models import KELLER_SEGEL, MEAN_FIELD, MODEL_NAMES, EntropyPair, FluxModel, by_name
from .geometry import EdgeValues, Grid, ScalarField, VectorField
from .kinetic import (
    KineticGrid,
    kinetic_grid_for,
    kinetic_report_rows,
    lemma3_functionals,
    reconstruct,
    rho_bound_check,
    rho_values,
)
from .snapshots import load_run, read_snapshot, write_run, write_snapshot
from .transport import BlowUpError, RunResult, State, StepReport, make_state, run, stable_dt, step
from .vanishing_viscosity import (
    SweepConfig,
    SweepReport,
    config_for_nu,
    layer_profile,
    restrict_to_common_grid,
    run_config,
    run_sweep,
)

__version__ = "0.1.0"
