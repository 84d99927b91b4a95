"""Command-line entry point.

::

    qmpemba run <config> [--seed N] [--realizations N] [--output DIR]
    qmpemba crossing <a.csv> <b.csv> [--persistence N] [--min-significance X]

Exit codes: 0 success, 2 configuration or argument error, 3 resource limit,
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from qmpemba import __version__
from qmpemba._env import env_log_level
from qmpemba.analysis import (
    count_crossings,
    default_persistence,
    detect_crossing,
    order_by_initial,
)
from qmpemba.chart import emit_svg
from qmpemba.config import load_config
from qmpemba.emit import emit_csv, read_csv
from qmpemba.errors import ConfigError, InvalidArgumentError, ResourceLimitError
from qmpemba.experiments import run_experiment

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmpemba",
        description="Quantum Mpemba effect experiments on dense statevectors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more log output on stderr (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--realizations", type=int)
    run.add_argument("--output", type=Path, help="output directory")
    run.add_argument("--workers", type=int,
                     help="worker processes (default: MPEMBA_THREADS, 0 = all CPUs)")
    run.add_argument("--no-svg", action="store_true", help="skip the SVG charts")

    cross = sub.add_parser("crossing", help="crossing report for two emitted CSV files")
    cross.add_argument("first", type=Path)
    cross.add_argument("second", type=Path)
    cross.add_argument("--persistence", type=int,
                       help="default: 2 for integer steps, 3 for continuous time")
    cross.add_argument("--min-significance", type=float, default=2.0)
    return parser


def _setup_logging(verbosity: int) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = env_log_level("MPEMBA_LOG_LEVEL", logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("qmpemba")
    root.handlers[:] = [handler]
    root.setLevel(level)
    logging.captureWarnings(True)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config).with_overrides(
        seed=args.seed,
        realizations=args.realizations,
        output_dir=str(args.output) if args.output is not None else None,
    )
    result = run_experiment(cfg, workers=args.workers)
    out = Path(cfg.output_dir)
    emit_csv(result.series, out)
    if cfg.emit_svg and not args.no_svg:
        for observable, group in sorted(result.charts.items()):
            xlabel = result.xlabel or ("step" if cfg.uses_circuit else "t")
            emit_svg(group, out / f"{observable}.svg", title=observable,
                     xlabel=xlabel, ylabel=observable)
    print(result.summary)
    return EXIT_OK


def _cmd_crossing(args: argparse.Namespace) -> int:
    a, b = read_csv(args.first), read_csv(args.second)
    s1, s2 = order_by_initial(a, b)
    persistence = args.persistence
    if persistence is None:
        persistence = default_persistence(s1.times)
    report = detect_crossing(s1, s2, persistence, args.min_significance)
    flips = count_crossings(s1, s2, persistence)
    logger.info("%d persistent sign flip(s) between %s and %s", flips, s1.label, s2.label)
    print(f"{s1.label} vs {s2.label}: {report.summary()}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_crossing(args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"qmpemba: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"qmpemba: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"qmpemba: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
