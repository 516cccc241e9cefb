import numpy as np
import pytest

from vortexlayer import cli
from vortexlayer.config import (
    SCENARIO_NAMES,
    canonical_text,
    load_config,
    parse_config,
    scenario,
)
from vortexlayer.geometry import Grid
from vortexlayer.snapshots import (
    DISTANCE_COLUMNS,
    ENTROPY_COLUMNS,
    GRAD_COLUMNS,
    KINETIC_COLUMNS,
    LAYER_COLUMNS,
    MONITOR_COLUMNS,
    SNAP_COLUMNS,
    SNAP_META,
    SWEEP_COLUMNS,
    load_run,
    read_monitors,
    read_snapshot,
    snapshot_name,
    write_monitors,
    write_run,
    write_snapshot,
)
from vortexlayer.transport import StepReport
from vortexlayer.vanishing_viscosity import run_config


SINUSOID_INI = """
[run]
model = meanfield
nu = 0.05
t_final = 0.1

[grid]
nx = 12
ny = 10
lx = 2.0
ly = 1.0

[boundary]
a.preset = sinusoid
a.offset = 1.0
a.amplitude = 0.25
a.mode = 2
a.phase = 0.5
b0.preset = per_side
b0.left = 0.1
b0.right = 0.2
b0.bottom = 0.3
b0.top = 0.4
J.value = 0.8
b1 = 0.2
kappa = 0.5
"""


# ---------------------------------------------------------------------------
# configuration round trips

def test_scenarios_round_trip_through_canonical_text():
    for name in SCENARIO_NAMES:
        cfg = scenario(name)
        again = parse_config(canonical_text(cfg))
        assert again == cfg, name


def test_structured_profiles_round_trip():
    cfg = parse_config(SINUSOID_INI)
    assert cfg.nx == 12 and cfg.ly == 1.0
    again = parse_config(canonical_text(cfg))
    assert again == cfg
    bd = cfg.boundary()
    g = Grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    a = bd.a.evaluate(g, "left")
    assert a.max() <= 1.25 + 1e-12 and a.min() >= 0.75 - 1e-12
    assert np.all(bd.b0.evaluate(g, "top") == 0.4)


def test_load_config_from_file_and_inline(tmp_path):
    p = tmp_path / "case.cfg"
    p.write_text(SINUSOID_INI)
    assert load_config(str(p)) == parse_config(SINUSOID_INI)
    assert load_config(SINUSOID_INI) == parse_config(SINUSOID_INI)
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.cfg"))


def test_config_validation_failures():
    with pytest.raises(ValueError, match="model"):
        parse_config("[run]\nmodel = burgers\n")
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config("[run]\nviscosity = 0.1\n")
    with pytest.raises(ValueError, match="unknown config section"):
        parse_config("[physics]\nnu = 0.1\n")
    with pytest.raises(ValueError, match="kappa"):
        parse_config("[boundary]\nkappa = 1.0\n")
    with pytest.raises(ValueError):
        parse_config("[run]\nstore_gradients = maybe\n")
    # saturating transport needs data inside the unit interval and no nucleation
    with pytest.raises(ValueError, match="b1"):
        parse_config("[run]\nmodel = kellersegel\n[boundary]\nb1 = 0.5\n[initial]\nvalue = 0.5\n")
    with pytest.raises(ValueError):
        parse_config("[run]\nmodel = kellersegel\n[boundary]\nb0.value = 1.5\n[initial]\nvalue = 0.5\n")
    with pytest.raises(ValueError):
        parse_config("[run]\nmodel = kellersegel\n[initial]\nvalue = 2.0\n")


# ---------------------------------------------------------------------------
# CSV structure

def test_golden_headers_are_frozen():
    assert SNAP_META == "t,nx,ny,lx,ly,nu,model"
    assert SNAP_COLUMNS == "omega,h"
    assert GRAD_COLUMNS == "dwdx,dwdy"
    assert MONITOR_COLUMNS == (
        "step,t,dt,mass_before,mass_after,boundary_advective_outflux,"
        "boundary_diffusive_outflux,omega_min,omega_max,mass_identity_error,"
        "robin_m,grad_energy,energy_residual"
    )
    assert ENTROPY_COLUMNS == "xi,phi_id,residual,pass"
    assert KINETIC_COLUMNS == "record,eps,xi,value"
    assert SWEEP_COLUMNS == (
        "nu,nx,ny,steps,sup_omega,sqrt_nu_grad_l2,mass_initial,mass_final,"
        "max_mass_error,robin_max"
    )
    assert DISTANCE_COLUMNS == "nu_i,nu_j,p,distance"
    assert LAYER_COLUMNS == "nu,face_group,depth,depth_over_nu,omega"


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    g = Grid(7, 5, 1.5, 1.0)
    om = rng.standard_normal((7, 5))
    h = rng.standard_normal((7, 5))
    path = tmp_path / snapshot_name(0.125)
    assert path.name == "snap_0.125000.csv"
    write_snapshot(path, 0.125, g, 0.03, "meanfield", om, h)
    snap = read_snapshot(path)
    assert snap.t == 0.125 and snap.nu == 0.03
    assert snap.grid == g
    assert snap.model_name == "meanfield"
    assert snap.columns == ("omega", "h")
    assert np.array_equal(snap.fields[0], om)  # %.17g is lossless for doubles
    assert np.array_equal(snap.fields[1], h)


def test_snapshot_reader_rejects_malformed_files(tmp_path):
    g = Grid(4, 4, 1.0, 1.0)
    path = tmp_path / "snap_bad.csv"
    write_snapshot(path, 0.0, g, 0.1, "meanfield", np.zeros((4, 4)), np.zeros((4, 4)))
    lines = path.read_text().splitlines()
    lines[1] = lines[1].replace("4", "5", 1)  # nx no longer matches the payload
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        read_snapshot(path)
    empty = tmp_path / "snap_empty.csv"
    empty.write_text(f"{SNAP_META}\n0,4,4,1,1,0.1,meanfield\n{SNAP_COLUMNS}\n")
    with pytest.raises(ValueError, match="empty"):
        read_snapshot(empty)


def test_monitor_round_trip(tmp_path):
    reports = [
        StepReport(0, 0.0, 0.01, 1.0, 1.001, 0.002, -0.001, 0.0, 1.2, 1e-16, 0.5, 0.3, 1e-4),
        StepReport(1, 0.01, 0.01, 1.001, 1.002, 0.002, -0.001, 0.0, 1.21, -2e-16, 0.6, 0.31, 2e-4),
    ]
    path = tmp_path / "monitors.csv"
    write_monitors(path, reports)
    back = read_monitors(path)
    assert back == reports


def test_run_bundle_round_trip(tmp_path):
    from dataclasses import replace

    cfg = replace(scenario("meanfield_nucleation"), nx=12, ny=12, t_final=0.05,
                  output_interval=0.025, store_gradients=True)
    res = run_config(cfg)
    out = tmp_path / "bundle"
    write_run(out, res, cfg)
    back = load_run(out)
    assert back.times == res.times
    assert back.model.name == "meanfield"
    assert back.nu == res.nu
    for a, b in zip(back.omegas, res.omegas):
        assert np.array_equal(a, b)
    assert back.gradients is not None
    assert np.array_equal(back.gradients[1][0], res.gradients[1][0])
    assert len(back.reports) == len(res.reports)
    assert back.sup_omega == res.sup_omega


def test_load_run_requires_snapshots(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    with pytest.raises(FileNotFoundError, match="no snapshots"):
        load_run(empty)


# ---------------------------------------------------------------------------
# command line

def _run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_cli_print_config_round_trips(capsys):
    code, out, _ = _run_cli(capsys, "run", "--scenario", "steady_constant", "--print-config")
    assert code == 0
    assert parse_config(out) == scenario("steady_constant")


def test_cli_run_audit_kinetic_pipeline(tmp_path, capsys):
    rundir = str(tmp_path / "steady")
    code, out, err = _run_cli(
        capsys, "run", "--scenario", "steady_constant", "--t-final", "0.1",
        "--nx", "12", "--out", rundir,
    )
    assert code == 0, err
    assert "final max drift = 0\n" in out

    code, out, err = _run_cli(capsys, "audit", "--out", rundir)
    assert code == 0, err
    assert "verdict: pass" in out
    assert (tmp_path / "steady" / "entropy_report.csv").is_file()

    code, out, err = _run_cli(capsys, "kinetic", "--out", rundir)
    assert code == 0, err
    assert (tmp_path / "steady" / "kinetic_report.csv").is_file()
    assert "reconstruction max error" in out


def test_cli_audit_missing_directory(tmp_path, capsys):
    code, _, err = _run_cli(capsys, "audit", "--out", str(tmp_path / "void"))
    assert code == 1
    assert "error:" in err and "no snapshots" in err


def test_cli_rejects_unknown_grid_rule(tmp_path, capsys):
    code, _, err = _run_cli(
        capsys, "sweep", "--grid-rule", "cubic", "--out", str(tmp_path / "s")
    )
    assert code == 1
    assert "grid rule" in err


def test_cli_sweep_writes_reports(tmp_path, capsys):
    out = tmp_path / "sweep"
    code, stdout, err = _run_cli(
        capsys, "sweep", "--scenario", "steady_constant", "--nu-list", "0.1,0.05",
        "--grid-rule", "fixed", "--out", str(out),
    )
    assert code == 0, err
    assert "Cauchy verdict" in stdout
    sweep_lines = (out / "sweep_report.csv").read_text().splitlines()
    assert sweep_lines[0] == SWEEP_COLUMNS
    assert len(sweep_lines) == 3
    dist_lines = (out / "distances.csv").read_text().splitlines()
    assert dist_lines[0] == DISTANCE_COLUMNS
    assert len(dist_lines) == 4  # one pair x p in {1, 2, 4}
    layer_lines = (out / "layers.csv").read_text().splitlines()
    assert layer_lines[0] == LAYER_COLUMNS
    assert len(layer_lines) > 1
    assert (out / "run_nu_0.1" / "config.cfg").is_file()
    assert (out / "run_nu_0.05" / "monitors.csv").is_file()


def test_sweep_worker_pool_path(monkeypatch, tmp_path):
    from dataclasses import replace

    from vortexlayer.vanishing_viscosity import SweepConfig, run_sweep

    monkeypatch.setenv("VORTEXLAYER_THREADS", "2")
    base = replace(scenario("steady_constant"), t_final=0.05)
    rep = run_sweep(SweepConfig(scenario=base, nus=(0.1, 0.05), dx_max=0.05,
                                grid_divisor=1e-30, out_dir=str(tmp_path / "pool")))
    assert rep.errors == {}
    assert len(rep.results) == 2
    assert all(r is not None for r in rep.results)
    # constant equilibrium: both runs identical, so every distance is zero
    for *_pair, d in rep.distance_entries:
        assert d == 0.0
