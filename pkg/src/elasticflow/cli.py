"""Command-line entry points.

Subcommands: simulate | check-admissible | elastica | verify-identities |
mms-convergence.  Every failure exits nonzero with a machine-readable
``error category=<Name>: ...`` line on stderr.  The ELASTICFLOW_LOG
environment variable ({error, warn, info, debug}) sets the log level.
"""

import argparse
import logging
import os
import re
import sys
import time

from . import __version__
from .admissibility import check_analytic_admissibility, check_geometric_admissibility, prepare_initial
from .diagnostics import verify_curvature_evolution, verify_dissipation
from .elastica import newton_refine
from .errors import ElasticFlowError, InvalidValue, ParseError, StencilTooWide
from .flow import FlowConfig, FlowState, run_flow
from .generators import BUILTINS
from .io import (
    RunManifest,
    config_text,
    parse_config_text,
    parse_manifest,
    read_curve,
    read_trajectory_csv,
    write_curve,
    write_manifest,
    write_trajectory_csv,
)
from .mms import convergence_study

log = logging.getLogger("elasticflow")

_INITIAL_RE = re.compile(r"^builtin:([a-z_]+)\((.*)\)$")


def _setup_logging():
    level = os.environ.get("ELASTICFLOW_LOG", "warn").lower()
    mapping = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=mapping.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_initial(spec, n_grid):
    """Resolve an --initial spec: ``builtin:NAME(args)`` or ``file:PATH``."""
    if spec.startswith("file:"):
        return read_curve(spec[len("file:"):])
    match = _INITIAL_RE.match(spec.strip())
    if not match:
        raise InvalidValue("initial", f"cannot parse {spec!r}")
    name, argtext = match.groups()
    if name not in BUILTINS:
        raise InvalidValue("initial", f"unknown builtin {name!r} (have {sorted(BUILTINS)})")
    args = [float(a) for a in argtext.split(",") if a.strip()]
    return BUILTINS[name](*args, n=n_grid)


def _load_setup(args):
    if args.config:
        with open(args.config) as handle:
            raw = handle.read()
        config, initial_spec, prepare, _ = parse_config_text(raw)
    else:
        config, initial_spec, prepare = FlowConfig(), None, True
        raw = config_text(config)
    if getattr(args, "initial", None):
        initial_spec = args.initial
    return config, initial_spec, prepare, raw


def _cmd_simulate(args):
    config, initial_spec, prepare, raw = _load_setup(args)
    if initial_spec is None:
        raise InvalidValue("initial", "no initial curve given (flag --initial or config key)")
    curve = build_initial(initial_spec, config.n_grid)
    if prepare:
        curve = prepare_initial(curve, config.mu, rho=config.rho_min)
    started = time.perf_counter()
    result = run_flow(
        curve, config,
        override_admissibility=args.override_admissibility,
        record_every=args.record_every,
        with_ds6=args.with_ds6,
    )
    wall = time.perf_counter() - started
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), result.records)
    for state in result.states:
        write_curve(os.path.join(args.out, f"snapshot_{state.step_index}.curve"), state.curve)
    manifest = RunManifest(
        version=__version__,
        initial=initial_spec,
        termination=result.reason.value,
        detail=result.detail,
        wall_time_s=wall,
        override_admissibility=result.overridden,
        config_echo=raw,
    )
    write_manifest(os.path.join(args.out, "manifest.txt"), manifest)
    log.info("run finished: %s (%s)", result.reason.value, result.detail)
    print(f"{result.reason.value}: {result.detail}")
    return 0


def _cmd_check_admissible(args):
    config, initial_spec, _, _ = _load_setup(args)
    if initial_spec is None:
        raise InvalidValue("initial", "no initial curve given")
    curve = build_initial(initial_spec, config.n_grid)
    check = check_analytic_admissibility if args.analytic else check_geometric_admissibility
    report = check(curve, config.mu, rho=config.rho_min)
    print(report.to_table())
    for note in report.notes:
        print(f"  note: {note}")
    return 0 if report.overall else 1


def _cmd_elastica(args):
    config, initial_spec, prepare, _ = _load_setup(args)
    if initial_spec is None:
        raise InvalidValue("initial", "no initial curve given")
    curve = build_initial(initial_spec, config.n_grid)
    if prepare:
        curve = prepare_initial(curve, config.mu, rho=config.rho_min)
    result = run_flow(
        curve, config,
        override_admissibility=args.override_admissibility,
        record_every=args.record_every,
    )
    print(f"flow: {result.reason.value} ({result.detail})")
    refined, report = newton_refine(result.final_state.curve, config.mu)
    print(
        f"refined: interior residual {report.interior_residual:.3e}, "
        f"converged={report.converged}, iterations={report.newton_iterations}"
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_curve(os.path.join(args.out, "elastica.curve"), refined)
    return 0 if report.converged else 1


class _RecordShim:
    """Just enough of a DiagnosticsRecord to feed verify_dissipation."""

    class _Energy:
        def __init__(self, total):
            self.total = total

    def __init__(self, t, energy, diss):
        self.time = t
        self.energy = self._Energy(energy)
        self.dissipation = diss


def _cmd_verify_identities(args):
    directory = args.dir
    manifest = parse_manifest(os.path.join(directory, "manifest.txt"))
    config, _, _, _ = parse_config_text(manifest.config_echo)
    table = read_trajectory_csv(os.path.join(directory, "trajectory.csv"))
    records = [
        _RecordShim(t, e, d)
        for t, e, d in zip(table["time"], table["energy"], table["dissipation"])
    ]
    # a run that terminates between recording strides appends one final
    # off-stride record; verify on the longest uniformly spaced prefix
    if len(records) >= 3:
        stride = records[1].time - records[0].time
        keep = 2
        while keep < len(records) and abs(
            records[keep].time - records[keep - 1].time - stride
        ) <= 1e-9 * max(stride, 1e-300):
            keep += 1
        records = records[:keep]
    defect = verify_dissipation(records)
    print(f"dissipation identity max defect: {defect:.6e} ({len(records)} records)")

    snaps = []
    for name in os.listdir(directory):
        match = re.match(r"snapshot_(\d+)\.curve$", name)
        if match:
            snaps.append(int(match.group(1)))
    snaps.sort()
    code = 0
    triple = None
    for i in range(len(snaps) - 2):
        a, b, c = snaps[i:i + 3]
        if b - a == c - b:
            triple = (a, b, c)
    if triple:
        states = [
            FlowState(step * config.dt,
                      read_curve(os.path.join(directory, f"snapshot_{step}.curve")),
                      step)
            for step in triple
        ]
        try:
            sup = verify_curvature_evolution(states, config)
            print(f"curvature evolution sup defect (steps {triple}): {sup:.6e}")
        except StencilTooWide as exc:
            print(f"curvature evolution: skipped ({exc})")
    else:
        print("curvature evolution: need three uniformly spaced snapshots, skipped")
    return code


def _cmd_mms(args):
    study = convergence_study()
    print(study.table())
    ok = abs(study.spatial_order - 2.0) <= 0.3 and abs(study.temporal_order - 1.0) <= 0.2
    return 0 if ok else 1


def make_parser():
    parser = argparse.ArgumentParser(
        prog="elasticflow",
        description="Gradient flow of the bending-plus-length energy for planar "
                    "curves with endpoints sliding on the x-axis",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--initial", help="builtin:NAME(args) or file:PATH")
        if out_required is not None:
            p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--record-every", type=int, default=100, dest="record_every")
        p.add_argument("--override-admissibility", action="store_true",
                       dest="override_admissibility")
        p.add_argument("--with-ds6", action="store_true", dest="with_ds6")

    p = sub.add_parser("simulate", help="run the flow, write trajectory + manifest")
    common(p, out_required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check-admissible", help="print an admissibility report")
    common(p)
    p.add_argument("--analytic", action="store_true",
                   help="use the analytic verdict (all six groups)")
    p.set_defaults(func=_cmd_check_admissible)

    p = sub.add_parser("elastica", help="run the flow, then Newton-refine the limit")
    common(p)
    p.set_defaults(func=_cmd_elastica)

    p = sub.add_parser("verify-identities", help="check energy/curvature identities on a saved run")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=_cmd_verify_identities)

    p = sub.add_parser("mms-convergence", help="manufactured-solution order study")
    p.set_defaults(func=_cmd_mms)
    return parser


def main(argv=None):
    _setup_logging()
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ElasticFlowError as exc:
        print(f"error category={type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, (ParseError, InvalidValue)) else 1
    except FileNotFoundError as exc:
        print(f"error category=MissingFile: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
