"""Command-line front end.

    mlsvsdk experiment -c CONFIG -o REPORT.csv [--set k=v]... [--seed N] [--threads N] [--no-timing]
    mlsvsdk approximate -n NODES.csv -c CONFIG -g GRID|POINTS.csv -o OUT.csv
    mlsvsdk rate -r REPORT.csv

Exit codes: 0 success, 1 fatal error, 2 experiment finished with failed levels.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from .errors import InvalidArgumentError, SingularSystemError
from .experiments import ExperimentReport, fit_rate, run_experiment
from .geometry import DomainBox, NodeSet, grid_points, read_nodes_csv, write_nodes_csv
from .mls import MovingLeastSquares

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _err(msg):
    print(f"mlsvsdk: error: {msg}", file=sys.stderr)


def parse_grid_spec(spec: str) -> np.ndarray:
    """``lo:hi:num`` per axis, axes separated by commas, e.g. ``-1:1:201,-1:1:201``."""
    lows, highs, counts = [], [], []
    for axis in spec.split(","):
        parts = axis.split(":")
        if len(parts) != 3:
            raise InvalidArgumentError(f"grid axis {axis!r} is not lo:hi:num")
        try:
            lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise InvalidArgumentError(f"grid axis {axis!r} is not lo:hi:num") from None
        if num < 1:
            raise InvalidArgumentError("grid axis needs num >= 1")
        lows.append(lo)
        highs.append(hi)
        counts.append(num)
    if any(c == 1 for c in counts):
        axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lows, highs, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel(order="F") for g in mesh], axis=1)
    return grid_points(DomainBox(lows, highs), counts)


def _eval_points(arg: str, dim: int) -> np.ndarray:
    if arg.endswith(".csv") or os.path.isfile(arg):
        pts = read_nodes_csv(arg).points
    else:
        pts = parse_grid_spec(arg)
    if pts.shape[1] != dim:
        raise InvalidArgumentError(f"evaluation points have dimension {pts.shape[1]}, nodes have {dim}")
    return pts


def cmd_experiment(args) -> int:
    try:
        raw = cfgmod.apply_overrides(cfgmod.load_config(args.config), args.set)
        if args.seed is not None:
            raw["seed"] = args.seed
        spec = cfgmod.experiment_from_config(raw)
        report = run_experiment(spec, threads=args.threads)
        if args.no_timing:
            for row in report.rows:
                row.wall_time_s = 0.0
        report.to_csv(args.output)
    except (InvalidArgumentError, OSError) as exc:
        _err(exc)
        return EXIT_FATAL
    for note in report.notes:
        print(f"mlsvsdk: {note}", file=sys.stderr)
    return EXIT_PARTIAL if report.failed_levels else EXIT_OK


def cmd_approximate(args) -> int:
    try:
        nodes = read_nodes_csv(args.nodes, require_values=True)
        raw = cfgmod.apply_overrides(cfgmod.load_config(args.config), args.set)
        cfg = cfgmod.mls_config_from_config(raw, nodes.dim)
        pts = _eval_points(args.grid, nodes.dim)
        values = MovingLeastSquares(cfg, nodes)(pts, threads=args.threads)
        write_nodes_csv(args.output, NodeSet(pts, values, check_distinct=False))
    except (InvalidArgumentError, SingularSystemError, OSError) as exc:
        _err(exc)
        return EXIT_FATAL
    return EXIT_OK


def cmd_rate(args) -> int:
    try:
        report = ExperimentReport.from_csv(args.report, dim=args.dim)
        fit_rate(report)
    except (InvalidArgumentError, OSError, ValueError) as exc:
        _err(exc)
        return EXIT_FATAL
    print(f"rate_h={report.rate_h:.6f}")
    print(f"rate_n={report.rate_n:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlsvsdk", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="run a refinement sweep and write a report CSV")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1, help="0 = one per core")
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall_time_s (byte-reproducible output)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("approximate", help="evaluate the approximant of a node CSV")
    p.add_argument("-n", "--nodes", required=True)
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-g", "--grid", required=True, help="lo:hi:num[,lo:hi:num...] or a points CSV")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("rate", help="fit convergence rates from a report CSV")
    p.add_argument("-r", "--report", required=True)
    p.add_argument("--dim", type=int, help="domain dimension (inferred from N and h if omitted)")
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
