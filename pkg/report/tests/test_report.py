"""End-to-end report generation: figure sets, manifest, determinism."""
import glob
import os

import pytest
from helpers import snap_dir, sweep_dir, tree_digest, write_distances, write_entropy

from report_plots import make_report
from report_plots.cli import main


def _manifest_lines(out_dir):
    with open(os.path.join(out_dir, "manifest.csv"), "r", encoding="ascii") as fh:
        return fh.read().splitlines()


def test_three_snapshots_yield_three_heatmaps(tmp_path):
    run = tmp_path / "run"
    names = snap_dir(run, count=3)
    out = tmp_path / "figs"
    rows = make_report(str(run), str(out))
    assert [r[0] for r in rows] == [f"heatmap_{n[:-4]}.png" for n in sorted(names)]
    assert [r[1] for r in rows] == sorted(names)
    for name, _, _ in rows:
        assert os.path.getsize(out / name) > 0
    lines = _manifest_lines(out)
    assert lines[0] == "figure,source,sha256"
    assert len(lines) == 4


def test_full_sweep_directory_yields_all_figure_kinds(tmp_path):
    sw = tmp_path / "sw"
    sweep_dir(sw)
    out = tmp_path / "figs"
    rows = make_report(str(sw), str(out))
    figures = [r[0] for r in rows]
    assert sum(f.startswith("heatmap_") for f in figures) == 4
    assert "distances.png" in figures
    assert "layers.png" in figures
    assert len(figures) == 6
    # manifest is complete: every row maps a real figure to its source csv
    for name, source, digest in rows:
        assert os.path.getsize(out / name) > 0
        assert os.path.isfile(sw / source)
        assert len(digest) == 64
    by_fig = dict((r[0], r[1]) for r in rows)
    assert by_fig["distances.png"] == "distances.csv"
    assert by_fig["layers.png"] == "layers.csv"


@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_report_is_deterministic_across_two_runs(tmp_path, fmt):
    sw = tmp_path / "sw"
    sweep_dir(sw)
    write_entropy(sw / "run_nu_0.1" / "entropy_report.csv")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    rows1 = make_report(str(sw), str(out1), fmt)
    rows2 = make_report(str(sw), str(out2), fmt)
    assert rows1 == rows2  # same figures, same sources, same content hashes
    assert _manifest_lines(out1) == _manifest_lines(out2)
    assert tree_digest(out1) == tree_digest(out2)


def test_input_directory_is_never_mutated(tmp_path):
    sw = tmp_path / "sw"
    sweep_dir(sw)
    before = tree_digest(sw)
    make_report(str(sw), str(tmp_path / "figs"))
    assert tree_digest(sw) == before


def test_entropy_report_becomes_extra_figure(tmp_path):
    run = tmp_path / "run"
    snap_dir(run, count=1)
    write_entropy(run / "entropy_report.csv")
    rows = make_report(str(run), str(tmp_path / "figs"))
    assert [r[0] for r in rows] == ["entropy_report.png", "heatmap_snap_0.000000.png"]
    assert rows[0][1] == "entropy_report.csv"


def test_empty_optional_table_degrades_to_fewer_figures(tmp_path):
    run = tmp_path / "run"
    snap_dir(run, count=1)
    write_distances(run / "distances.csv", nus=())  # header only
    rows = make_report(str(run), str(tmp_path / "figs"))
    assert [r[0] for r in rows] == ["heatmap_snap_0.000000.png"]


def test_failure_mid_report_leaves_no_manifest_or_temp_files(tmp_path):
    run = tmp_path / "run"
    names = snap_dir(run, count=3)
    bad = run / sorted(names)[1]
    text = bad.read_text().splitlines()
    bad.write_text("\n".join(text[:-3]) + "\n")  # payload now too short
    out = tmp_path / "figs"
    with pytest.raises(ValueError, match=sorted(names)[1]):
        make_report(str(run), str(out))
    assert not os.path.exists(out / "manifest.csv")
    assert glob.glob(str(out / "*.tmp")) == []
    # the figure completed before the failure is whole, not truncated
    assert os.path.getsize(out / f"heatmap_{sorted(names)[0][:-4]}.png") > 0


def test_cli_success_and_errors(tmp_path, capsys):
    run = tmp_path / "run"
    snap_dir(run, count=2)
    out = tmp_path / "figs"
    assert main(["--in", str(run), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "wrote 2 figures" in stdout
    assert os.path.isfile(out / "manifest.csv")

    assert main(["--in", str(tmp_path / "missing"), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "no snapshots" in err

    with pytest.raises(SystemExit) as exc:
        main(["--in", str(run), "--out", str(out), "--format", "pdf"])
    assert exc.value.code == 2


def test_cli_svg_format(tmp_path, capsys):
    run = tmp_path / "run"
    snap_dir(run, count=1)
    out = tmp_path / "figs"
    assert main(["--in", str(run), "--out", str(out), "--format", "svg"]) == 0
    capsys.readouterr()
    assert os.path.getsize(out / "heatmap_snap_0.000000.svg") > 0
