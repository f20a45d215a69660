import shutil
import subprocess

import pytest

HEADER = "time,energy,bending,length,dissipation,tau2_0,tau2_1,norm_k,norm_ds2k,v_sup"


def write_curve_file(path, nodes):
    lines = [f"# elastic-curve v1 N={len(nodes) - 1}"]
    lines.extend(f"{x!r} {y!r}" for x, y in nodes)
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture()
def synthetic_run(tmp_path):
    """A handwritten run directory exercising the file-format contract."""
    run = tmp_path / "run"
    run.mkdir()
    rows = [
        "0,2.0,1.0,1.0,5.0,0.5,0.5,1.0,10.0,3.0",
        "0.001,1.5,0.6,0.9,2.0,0.4,0.4,0.8,8.0,2.0",
        "0.002,1.2,0.4,0.8,1.0,0.3,0.3,0.7,7.0,1.5",
    ]
    (run / "trajectory.csv").write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    (run / "manifest.txt").write_text(
        "# elastic-flow run manifest v1\nversion = test\ninitial = builtin:test\n"
        "termination = MaxTime\ndetail = t\nwall_time_s = 0\n"
        "override_admissibility = false\n[config]\nmu = 1.0\n"
    )
    n = 16
    for step in (0, 1, 2):
        nodes = [(i / n, 0.1 * (1 - 0.2 * step) * (i / n) * (1 - i / n)) for i in range(n + 1)]
        write_curve_file(run / f"snapshot_{step}.curve", nodes)
    return run


@pytest.fixture(scope="session")
def solver_cli():
    exe = shutil.which("elasticflow")
    if exe is None:
        pytest.skip("elasticflow CLI not installed")
    return exe


@pytest.fixture(scope="session")
def arch_run_dir(tmp_path_factory, solver_cli):
    """The mu=1 arch run produced through the solver's external interface."""
    out = tmp_path_factory.mktemp("arch_run")
    config = tmp_path_factory.mktemp("conf") / "run.conf"
    config.write_text(
        "mu = 1.0\nn_grid = 128\ndt = 1e-5\nt_max = 0.1\nrho_min = 0.08\nel_tol = 1e-8\n"
    )
    subprocess.run(
        [solver_cli, "simulate", "--config", str(config),
         "--initial", "builtin:sine_arch(0.1,1)", "--out", str(out),
         "--record-every", "50", "--override-admissibility"],
        check=True, capture_output=True, text=True,
    )
    return out
