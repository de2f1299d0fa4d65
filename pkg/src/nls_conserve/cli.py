"""Command line entry point: ``nls-conserve <experiment> [--config PATH] [--set k=v ...] [--out DIR]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nls-conserve",
        description="Simulate the power-law NLS and check its conservation laws.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="INI-style config file (sections [problem], [grid], ...)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config entry (repeatable)")
    parser.add_argument("--out", default="nls-out", help="output directory (default: nls-out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.experiment, args.config, args.overrides)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"nls-conserve: configuration error: {exc}", file=sys.stderr)
        return 2
    report = run(cfg, args.out)
    if args.experiment == "exponents" and "exponents" in report.diagnostics:
        print(json.dumps(report.diagnostics["exponents"], indent=2))
    print(report.summary())
    print(f"report: {args.out}/report.json")
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
