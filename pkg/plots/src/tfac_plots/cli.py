"""Command-line figure rendering from solver run directories."""

from __future__ import annotations

import argparse
import sys

from tfac_plots.artifacts import ArtifactError
from tfac_plots.figures import plot_energy, plot_snapshots


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfac-plot", description="Render figures from a solver run directory"
    )
    subs = parser.add_subparsers(dest="mode", required=True)

    p_energy = subs.add_parser("energy", help="energy decay and step-size traces")
    p_energy.add_argument("run_dir")
    p_energy.add_argument("out_image")
    p_energy.add_argument("--log-t", action="store_true")

    p_snap = subs.add_parser("snapshots", help="coarsening snapshot panels")
    p_snap.add_argument("run_dir")
    p_snap.add_argument("out_image")
    p_snap.add_argument("--times", default="10,50,100,300",
                        help="comma-separated snapshot times")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "energy":
            out = plot_energy(args.run_dir, args.out_image, log_t=args.log_t)
        else:
            times = [float(x) for x in args.times.split(",") if x]
            out = plot_snapshots(args.run_dir, times, args.out_image)
    except (ArtifactError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
