"""Command-line entry point: scenario runner and config validator."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .scenarios import SCENARIOS, run_scenario, validate_config_file


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combsense",
        description="Frequency-comb metrology simulator: scenario runner and analysis CLI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a named reproduction scenario")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config", default=None, help="TOML config path (shipped defaults if omitted)")
    run.add_argument("--out", default="out", help="output directory (default ./out)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument(
        "--check",
        action="store_true",
        help="exit non-zero if any embedded acceptance threshold is missed",
    )

    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("--config", default=None, help="TOML config path (shipped defaults if omitted)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        diags = validate_config_file(args.config)
        for d in diags:
            print(str(d), file=sys.stderr)
        if not diags:
            print("config ok")
        return 1 if diags else 0
    try:
        return run_scenario(
            args.scenario,
            config_path=args.config,
            out_dir=args.out,
            seed=args.seed,
            check=args.check,
        )
    except ConfigError as exc:
        print(f"combsense: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
