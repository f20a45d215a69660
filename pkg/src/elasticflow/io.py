"""Bit-stable file I/O: curve files, trajectory CSV, run manifests, config.

Formats (consumed by the plotting frontend and external tools):

* curve file:  header ``# elastic-curve v1 N=<n>`` then N+1 lines ``x y``
  at 17 significant digits (lossless float64 round-trip).
* trajectory CSV: header
  ``time,energy,bending,length,dissipation,tau2_0,tau2_1,norm_k,norm_ds2k,v_sup``
  one row per diagnostics record, plus optional per-snapshot curve files
  ``snapshot_<step>.curve`` next to it.
* manifest: ``key = value`` lines followed by a literal ``[config]`` block
  echoing the configuration text verbatim; parse/serialize round-trips.

All writes are atomic (write to a temp file in the same directory, then
rename).
"""

import os
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidValue, ParseError
from .flow import FlowConfig
from .geometry import DiscreteCurve

TRAJECTORY_HEADER = "time,energy,bending,length,dissipation,tau2_0,tau2_1,norm_k,norm_ds2k,v_sup"


def fmt(x):
    """Fixed 17-significant-digit formatting (float64 round-trips exactly)."""
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_curve(path, curve):
    lines = [f"# elastic-curve v1 N={curve.n}"]
    lines.extend(f"{fmt(p[0])} {fmt(p[1])}" for p in curve.nodes)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_curve(path):
    with open(path) as handle:
        header = handle.readline().strip()
        if not header.startswith("# elastic-curve v1 N="):
            raise ParseError(f"{path}: not an elastic-curve v1 file", line=1)
        try:
            n = int(header.rsplit("=", 1)[1])
        except ValueError as exc:
            raise ParseError(f"{path}: bad node count in header", line=1) from exc
        rows = []
        for lineno, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{path}: expected 'x y'", line=lineno)
            rows.append((float(parts[0]), float(parts[1])))
    if len(rows) != n + 1:
        raise ParseError(f"{path}: expected {n + 1} nodes, found {len(rows)}")
    return DiscreteCurve(np.array(rows))


def trajectory_rows(records):
    rows = [TRAJECTORY_HEADER]
    for r in records:
        rows.append(",".join(fmt(v) for v in (
            r.time, r.energy.total, r.energy.bending, r.length, r.dissipation,
            r.boundary_tau2[0], r.boundary_tau2[1], r.norm_k, r.norm_ds2k, r.v_sup,
        )))
    return "\n".join(rows) + "\n"


def write_trajectory_csv(path, records):
    atomic_write_text(path, trajectory_rows(records))


def read_trajectory_csv(path):
    """Rows as a dict of column -> float array."""
    with open(path) as handle:
        header = handle.readline().strip()
        if header != TRAJECTORY_HEADER:
            raise ParseError(f"{path}: unexpected trajectory header", line=1)
        data = [
            [float(v) for v in line.strip().split(",")]
            for line in handle if line.strip()
        ]
    arr = np.array(data) if data else np.zeros((0, 10))
    return {name: arr[:, i] for i, name in enumerate(TRAJECTORY_HEADER.split(","))}


_CONFIG_TYPES = {
    "mu": float, "n_grid": int, "dt": float, "scheme": str, "t_max": float,
    "velocity_mode": str, "rho_min": float, "length_min": float,
    "el_tol": float, "bc_tol": float, "c_stab": float, "max_bc_sweeps": int,
}
_POSITIVE_KEYS = {"mu", "dt", "rho_min", "length_min", "el_tol", "bc_tol", "c_stab"}
_EXTRA_KEYS = {"initial": str, "prepare": bool}


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(path):
    """Parse a ``key = value`` config file.

    Returns (FlowConfig, initial_spec_or_None, prepare_flag, raw_text).
    Unknown keys raise ParseError with the line number; out-of-range values
    raise InvalidValue with the key name.  An empty file yields defaults.
    """
    with open(path) as handle:
        raw = handle.read()
    return parse_config_text(raw)


def parse_config_text(raw):
    values = {}
    initial = None
    prepare = True
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _EXTRA_KEYS:
            if key == "initial":
                initial = value
            else:
                try:
                    prepare = _parse_bool(value)
                except ValueError:
                    raise InvalidValue(key, f"cannot parse {value!r} as a boolean")
            continue
        if key not in _CONFIG_TYPES:
            raise ParseError(f"unknown key {key!r}", line=lineno)
        caster = _CONFIG_TYPES[key]
        try:
            values[key] = caster(value)
        except ValueError:
            raise InvalidValue(key, f"cannot parse {value!r} as {caster.__name__}")
    config = FlowConfig(**values)
    try:
        config.validate()
    except ValueError as exc:
        text = str(exc)
        key = next((k for k in _CONFIG_TYPES if text.startswith(k)), text.split()[0])
        raise InvalidValue(key, text) from exc
    return config, initial, prepare, raw


def config_text(config):
    """Render a FlowConfig as a config-file body (used when no file given)."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {fmt(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunManifest:
    version: str
    initial: str
    termination: str
    detail: str
    wall_time_s: float
    override_admissibility: bool
    config_echo: str

    def serialize(self):
        head = [
            "# elastic-flow run manifest v1",
            f"version = {self.version}",
            f"initial = {self.initial}",
            f"termination = {self.termination}",
            f"detail = {self.detail.replace(chr(10), '; ')}",
            f"wall_time_s = {fmt(self.wall_time_s)}",
            f"override_admissibility = {str(self.override_admissibility).lower()}",
        ]
        return "\n".join(head) + "\n[config]\n" + self.config_echo


def parse_manifest(path):
    with open(path) as handle:
        text = handle.read()
    if not text.startswith("# elastic-flow run manifest v1\n"):
        raise ParseError(f"{path}: not a run manifest", line=1)
    head_text, sep, config_echo = text.partition("\n[config]\n")
    if not sep:
        raise ParseError(f"{path}: missing [config] block")
    head = {}
    for i, line in enumerate(head_text.splitlines()[1:], start=2):
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=i)
        key, _, value = line.partition("=")
        head[key.strip()] = value.strip()
    missing = {"version", "initial", "termination", "detail", "wall_time_s",
               "override_admissibility"} - head.keys()
    if missing:
        raise ParseError(f"{path}: missing manifest keys {sorted(missing)}")
    return RunManifest(
        version=head["version"],
        initial=head["initial"],
        termination=head["termination"],
        detail=head["detail"],
        wall_time_s=float(head["wall_time_s"]),
        override_admissibility=head["override_admissibility"] == "true",
        config_echo=config_echo,
    )


def write_manifest(path, manifest):
    atomic_write_text(path, manifest.serialize())
