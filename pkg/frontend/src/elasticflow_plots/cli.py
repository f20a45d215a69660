"""CLI: elasticflow-plots --dir DIR --steps a,b,c --out PREFIX."""

import argparse
import sys

from .plots import MissingFile, PlotSpec, render_all


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="elasticflow-plots",
        description="Render energy traces and curve snapshots from a run directory",
    )
    parser.add_argument("--dir", required=True, help="run directory (trajectory.csv + manifest)")
    parser.add_argument("--steps", default="", help="comma-separated snapshot steps")
    parser.add_argument("--out", required=True, help="output image path prefix")
    args = parser.parse_args(argv)

    steps = tuple(int(s) for s in args.steps.split(",") if s.strip())
    try:
        spec = PlotSpec(directory=args.dir, out_prefix=args.out, steps=steps)
        written = render_all(spec)
    except MissingFile as exc:
        print(f"error category=MissingFile: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
