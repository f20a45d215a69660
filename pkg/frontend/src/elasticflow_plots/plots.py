"""Render energy/dissipation traces and curve snapshot overlays.

Rendering never mutates the input directory; output is deterministic for
fixed inputs and figure sizes (Agg backend, fixed dpi, no timestamps).
"""

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

TRAJECTORY_HEADER = "time,energy,bending,length,dissipation,tau2_0,tau2_1,norm_k,norm_ds2k,v_sup"
MONOTONE_SLACK = 1e-10


class MissingFile(Exception):
    """A required run file (trajectory, manifest or snapshot) is absent."""


@dataclass(frozen=True)
class PlotSpec:
    directory: str
    out_prefix: str
    steps: tuple = ()
    energy_title: str = "energy and dissipation"
    snapshots_title: str = "curve evolution"
    figsize: tuple = (7.0, 4.5)
    dpi: int = 120

    def __post_init__(self):
        require_run_dir(self.directory)

    @property
    def energy_path(self):
        return f"{self.out_prefix}_energy.png"

    @property
    def snapshots_path(self):
        return f"{self.out_prefix}_snapshots.png"


def require_run_dir(directory):
    for name in ("trajectory.csv", "manifest.txt"):
        if not os.path.isfile(os.path.join(directory, name)):
            raise MissingFile(f"{directory} does not contain {name}")


def read_trajectory(directory):
    path = os.path.join(directory, "trajectory.csv")
    if not os.path.isfile(path):
        raise MissingFile(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if ",".join(header) != TRAJECTORY_HEADER:
            raise MissingFile(f"{path}: unexpected trajectory header")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def read_snapshot(directory, step):
    path = os.path.join(directory, f"snapshot_{step}.curve")
    if not os.path.isfile(path):
        raise MissingFile(path)
    with open(path) as handle:
        header = handle.readline()
        if not header.startswith("# elastic-curve v1 N="):
            raise MissingFile(f"{path}: not an elastic-curve v1 file")
        nodes = [tuple(map(float, line.split())) for line in handle if line.strip()]
    return np.array(nodes)


def render_energy_trace(directory, out_path=None, title="energy and dissipation",
                        figsize=(7.0, 4.5), dpi=120):
    """One figure with E(t) and the dissipation on twin axes.

    Steps where the energy increases beyond the monotonicity slack are
    highlighted with markers.  Returns the written path.
    """
    table = read_trajectory(directory)
    out_path = out_path or os.path.join(directory, "energy.png")
    t, energy, diss = table["time"], table["energy"], table["dissipation"]

    fig, ax = plt.subplots(figsize=figsize, dpi=dpi)
    ax.plot(t, energy, color="tab:blue", lw=1.5, label="energy",
            marker="o" if len(t) < 2 else None)
    if len(energy) > 1:
        rises = np.nonzero(np.diff(energy) > MONOTONE_SLACK * (1 + np.abs(energy[:-1])))[0]
        if rises.size:
            ax.plot(t[rises + 1], energy[rises + 1], "rx", ms=8,
                    label="monotonicity violated")
    ax.set_xlabel("time")
    ax.set_ylabel("energy", color="tab:blue")
    twin = ax.twinx()
    twin.plot(t, diss, color="tab:orange", lw=1.0, label="dissipation",
              marker="o" if len(t) < 2 else None)
    twin.set_ylabel("dissipation", color="tab:orange")
    if len(t) > 1 and diss.max() > 0 and diss.max() / max(diss[diss > 0].min(), 1e-300) > 1e3:
        twin.set_yscale("log")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def render_snapshots(directory, steps, out_path=None, title="curve evolution",
                     figsize=(7.0, 4.5), dpi=120):
    """Overlay the curve outlines at the given steps on the constraint line."""
    require_run_dir(directory)
    out_path = out_path or os.path.join(directory, "snapshots.png")
    fig, ax = plt.subplots(figsize=figsize, dpi=dpi)
    cmap = plt.get_cmap("viridis")
    steps = list(steps)
    for i, step in enumerate(steps):
        nodes = read_snapshot(directory, step)
        color = cmap(0.1 + 0.8 * i / max(len(steps) - 1, 1))
        ax.plot(nodes[:, 0], nodes[:, 1], color=color, lw=1.4, label=f"step {step}")
        ax.plot(nodes[[0, -1], 0], nodes[[0, -1], 1], "o", color=color, ms=5)
    ax.axhline(0.0, color="k", lw=0.8)  # the x-axis constraint line
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def render_all(spec):
    energy = render_energy_trace(
        spec.directory, spec.energy_path, title=spec.energy_title,
        figsize=spec.figsize, dpi=spec.dpi,
    )
    written = [energy]
    if spec.steps:
        written.append(render_snapshots(
            spec.directory, spec.steps, spec.snapshots_path,
            title=spec.snapshots_title, figsize=spec.figsize, dpi=spec.dpi,
        ))
    return written
