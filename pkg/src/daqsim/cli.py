"""Command-line interface.

Subcommands: couplings, modes, block-fidelity, compare, protocol.
Exit codes: 0 success, 2 config error, 3 numerical/convergence error,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    ArgumentError,
    ConfigError,
    ConvergenceError,
    ResourceCapError,
    StabilityError,
)
from .runner import load_config, run_experiment

COMMANDS = ("couplings", "modes", "block-fidelity", "compare", "protocol")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daqsim",
        description="Digital-analog quantum simulation of the Heisenberg "
                    "model on a trapped-ion chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, overrides=args.override)
        artifact = run_experiment(config, args.command, out_dir=args.out)
    except (ConfigError, ArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, StabilityError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return 4
    for name in artifact.files:
        print(artifact.output_dir / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
