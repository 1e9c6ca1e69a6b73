"""Command-line interface.

Every subcommand takes a configuration document and optional overrides::

    mmgou solve-kappa --config model.yaml
    mmgou constants --config model.yaml --seed 7 --samples 200000 --out results
    mmgou validate --config model.yaml --workers 4

The subcommand selects the task (overriding the document's ``task`` field);
``--seed``, ``--samples``, ``--out``, ``--workers`` and ``--format`` override
the corresponding document fields.  ``--workers`` affects scheduling only:
reports are byte-identical for any worker count.
"""

from __future__ import annotations

import argparse
import sys

from .config import TASKS, parse_config_file
from .errors import ConfigError, MmgouError
from .runner import run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmgou",
        description="Tail analysis for Markov-modulated Ornstein-Uhlenbeck "
        "processes and affine recursions",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", required=True, help="configuration document (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--samples", type=int, default=None, help="override sample count")
        p.add_argument(
            "--workers", type=int, default=None,
            help="worker processes (speed only; results identical)",
        )
        p.add_argument(
            "--format", choices=("json", "csv", "both"), default=None,
            help="override output formats",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = parse_config_file(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    overrides = {"task": args.task}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides["samples"] = args.samples
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.format is not None:
        overrides["formats"] = ["json", "csv"] if args.format == "both" else [args.format]
    if args.out is not None:
        overrides["out"] = args.out
    try:
        config = config.replace(**overrides)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    try:
        return run(config)
    except MmgouError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
