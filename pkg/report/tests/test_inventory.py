"""Parsers and directory discovery against hand-written contract files."""
import os

import numpy as np
import pytest
from helpers import fmt, random_fields, snap_dir, write_distances, write_entropy, write_layers, write_snap

from report_plots import discover, read_distances, read_entropy, read_layers, read_snapshot


def test_snapshot_round_trip_is_exact(tmp_path):
    omega, h = random_fields(7, 4, seed=3)
    p = tmp_path / "snap_0.250000.csv"
    write_snap(p, 0.25, omega, h, lx=2.0, ly=1.5, nu=0.05, model="kellersegel")
    snap = read_snapshot(str(p))
    assert (snap.t, snap.nx, snap.ny) == (0.25, 7, 4)
    assert (snap.lx, snap.ly, snap.nu) == (2.0, 1.5, 0.05)
    assert snap.model_name == "kellersegel"
    # %.17g survives the decimal round trip bit-exactly
    assert np.array_equal(snap.omega, omega)
    assert np.array_equal(snap.h, h)


def test_snapshot_errors_name_the_file(tmp_path):
    bad_header = tmp_path / "snap_a.csv"
    bad_header.write_text("time,nx\n")
    with pytest.raises(ValueError, match="snap_a.csv"):
        read_snapshot(str(bad_header))

    omega, h = random_fields(3, 3, seed=0)
    short = tmp_path / "snap_b.csv"
    write_snap(short, 0.0, omega, h)
    lines = short.read_text().splitlines()
    short.write_text("\n".join(lines[:-2]) + "\n")  # drop payload rows
    with pytest.raises(ValueError, match="snap_b.csv"):
        read_snapshot(str(short))

    empty = tmp_path / "snap_c.csv"
    write_snap(empty, 0.0, omega, h)
    lines = empty.read_text().splitlines()
    empty.write_text("\n".join(lines[:3]) + "\n")
    with pytest.raises(ValueError, match="empty payload"):
        read_snapshot(str(empty))


def test_table_readers(tmp_path):
    d = tmp_path / "distances.csv"
    write_distances(d, nus=(0.1, 0.05, 0.025), ps=(1.0, 2.0))
    entries = read_distances(str(d))
    assert len(entries) == 6  # 3 pairs x 2 exponents
    assert {e[2] for e in entries} == {1.0, 2.0}

    lay = tmp_path / "layers.csv"
    write_layers(lay, nus=(0.1,), depths=4)
    rows = read_layers(str(lay))
    assert len(rows) == 16  # 4 sides x 4 depths
    assert {r[1] for r in rows} == {"left", "right", "bottom", "top"}
    assert rows[0][3] == rows[0][2] / rows[0][0]

    ent = tmp_path / "entropy_report.csv"
    write_entropy(ent)
    erows = read_entropy(str(ent))
    assert len(erows) == 6
    assert all(ok == 1 for *_, ok in erows)


def test_table_reader_errors_name_the_file(tmp_path):
    p = tmp_path / "distances.csv"
    p.write_text("nu_i,nu_j,p,distance\n0.1,0.05,1,not_a_number\n")
    with pytest.raises(ValueError, match="distances.csv.*row 2"):
        read_distances(str(p))
    p.write_text("wrong,header\n")
    with pytest.raises(ValueError, match="bad header"):
        read_distances(str(p))


def test_discover_run_directory(tmp_path):
    names = snap_dir(tmp_path / "run", count=3)
    b = discover(str(tmp_path / "run"), str(tmp_path / "figs"))
    assert b.snapshot_paths == sorted(names)
    assert b.distances_path is None and b.layers_path is None
    assert b.entropy_paths == []


def test_discover_sweep_directory_recurses_one_level(tmp_path):
    root = tmp_path / "sw"
    for sub in ("run_nu_0.1", "run_nu_0.05"):
        snap_dir(root / sub, count=2)
    write_distances(root / "distances.csv")
    write_layers(root / "layers.csv")
    write_entropy(root / "run_nu_0.1" / "entropy_report.csv")
    b = discover(str(root), str(tmp_path / "figs"))
    assert len(b.snapshot_paths) == 4
    assert all(os.sep in p for p in b.snapshot_paths)
    assert b.snapshot_paths == sorted(b.snapshot_paths)
    assert b.distances_path == "distances.csv"
    assert b.layers_path == "layers.csv"
    assert b.entropy_paths == [os.path.join("run_nu_0.1", "entropy_report.csv")]


def test_discover_requires_snapshots(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(FileNotFoundError, match="no snapshots"):
        discover(str(empty), str(tmp_path / "figs"))
    with pytest.raises(FileNotFoundError, match="no snapshots"):
        discover(str(tmp_path / "missing"), str(tmp_path / "figs"))


def test_discover_rejects_unknown_format(tmp_path):
    snap_dir(tmp_path / "run", count=1)
    with pytest.raises(ValueError, match="figure format"):
        discover(str(tmp_path / "run"), str(tmp_path / "figs"), "pdf")


def test_fmt_is_lossless():
    for x in (0.1, 1.0 / 3.0, 2.0**-52, 1.2345678901234567e300):
        assert float(fmt(x)) == x
