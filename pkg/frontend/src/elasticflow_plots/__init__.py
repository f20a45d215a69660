"""Static figures from elasticflow run directories.

Consumes only the solver's file formats: ``trajectory.csv`` (fixed
10-column header), ``snapshot_<step>.curve`` files and ``manifest.txt``.
"""

__version__ = "0.1.0"

from .plots import MissingFile, PlotSpec, render_energy_trace, render_snapshots
