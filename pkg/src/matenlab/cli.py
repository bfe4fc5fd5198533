"""Command-line entry point: ``maten-lab <experiment> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maten-lab",
        description="Run noise-characterization simulations and write CSV/JSON results.",
    )
    parser.add_argument("experiment", choices=experiments.EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="JSON file overriding the experiment defaults")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config value)")
    parser.add_argument("--full", action="store_true", help="use the full-scale trial counts and grids")
    parser.add_argument("--ingest", type=Path, help="expectation CSV to characterize (characterize only)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument(
        "--keep-symmetric", action="store_true", help="keep linear fields at zero (symmetric problem)"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(overrides, dict):
            raise ValueError("config file must hold a JSON object")
        cfg = experiments.resolve_config(args.experiment, overrides, args.seed, args.full, args.keep_symmetric)
        paths = experiments.run(cfg, args.out, str(args.ingest) if args.ingest else None)
    except (OSError, ValueError, KeyError) as exc:
        print(f"maten-lab: error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
