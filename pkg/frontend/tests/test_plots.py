import os
import re

import pytest

from elasticflow_plots import MissingFile, PlotSpec, render_energy_trace, render_snapshots
from elasticflow_plots.cli import main
from elasticflow_plots.plots import read_snapshot, read_trajectory


def test_read_trajectory(synthetic_run):
    table = read_trajectory(synthetic_run)
    assert list(table["time"]) == [0.0, 0.001, 0.002]
    assert table["energy"][0] == 2.0


def test_energy_trace(synthetic_run, tmp_path):
    out = tmp_path / "energy.png"
    written = render_energy_trace(synthetic_run, out)
    assert str(written) == str(out)
    assert os.path.getsize(out) > 0


def test_energy_trace_single_row(synthetic_run, tmp_path):
    lines = (synthetic_run / "trajectory.csv").read_text().splitlines()
    (synthetic_run / "trajectory.csv").write_text("\n".join(lines[:2]) + "\n")
    out = render_energy_trace(synthetic_run, tmp_path / "one.png")
    assert os.path.getsize(out) > 0


def test_snapshots(synthetic_run, tmp_path):
    out = render_snapshots(synthetic_run, [0, 1, 2], tmp_path / "snaps.png")
    assert os.path.getsize(out) > 0
    only_initial = render_snapshots(synthetic_run, [0], tmp_path / "first.png")
    assert os.path.getsize(only_initial) > 0


def test_missing_inputs(synthetic_run, tmp_path):
    with pytest.raises(MissingFile):
        render_snapshots(synthetic_run, [99], tmp_path / "x.png")
    with pytest.raises(MissingFile):
        render_energy_trace(tmp_path / "nowhere", tmp_path / "y.png")
    with pytest.raises(MissingFile):
        PlotSpec(directory=str(tmp_path), out_prefix=str(tmp_path / "p"))


def test_rendering_does_not_mutate_inputs(synthetic_run, tmp_path):
    before = {p: (synthetic_run / p).read_bytes() for p in os.listdir(synthetic_run)}
    render_energy_trace(synthetic_run, tmp_path / "e.png")
    render_snapshots(synthetic_run, [0, 2], tmp_path / "s.png")
    after = {p: (synthetic_run / p).read_bytes() for p in os.listdir(synthetic_run)}
    assert before == after


def test_rendering_deterministic(synthetic_run, tmp_path):
    a = render_energy_trace(synthetic_run, tmp_path / "a.png")
    b = render_energy_trace(synthetic_run, tmp_path / "b.png")
    assert open(a, "rb").read() == open(b, "rb").read()


def test_cli(synthetic_run, tmp_path, capsys):
    prefix = str(tmp_path / "out")
    code = main(["--dir", str(synthetic_run), "--steps", "0,1,2", "--out", prefix])
    captured = capsys.readouterr()
    assert code == 0
    assert os.path.getsize(prefix + "_energy.png") > 0
    assert os.path.getsize(prefix + "_snapshots.png") > 0
    assert "_energy.png" in captured.out
    code = main(["--dir", str(tmp_path / "missing"), "--out", prefix])
    captured = capsys.readouterr()
    assert code == 1
    assert "category=MissingFile" in captured.err


def test_criterion_11_smoke_on_solver_run(arch_run_dir, tmp_path):
    """[criterion 11] both renderers succeed on real solver output."""
    steps = sorted(
        int(m.group(1))
        for m in (re.match(r"snapshot_(\d+)\.curve$", p) for p in os.listdir(arch_run_dir))
        if m
    )
    assert steps, "solver run produced no snapshots"
    picks = [steps[0], steps[len(steps) // 2], steps[-1]]
    energy = render_energy_trace(arch_run_dir, tmp_path / "energy.png")
    snaps = render_snapshots(arch_run_dir, picks, tmp_path / "snaps.png")
    assert os.path.getsize(energy) > 0
    assert os.path.getsize(snaps) > 0
    # endpoints of every drawn snapshot sit on the constraint line
    for step in picks:
        nodes = read_snapshot(arch_run_dir, step)
        assert abs(nodes[0, 1]) <= 1e-8 and abs(nodes[-1, 1]) <= 1e-8
    print(f"[criterion 11] PASS (snapshots {picks})")
